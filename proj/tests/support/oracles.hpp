#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// None of these share code with the library beyond its model types.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "atpo/pomdp.hpp"
#include "atpo/rng.hpp"
#include "atpo/task_inference.hpp"

namespace atpo::testing {

/// Random POMDP with sparse random kernels; every row keeps at least one entry.
TabularPOMDP random_pomdp(Rng& rng, std::size_t nx, std::size_t na, std::size_t nz, double discount = 0.9);

/// Random probability vector with roughly `zero_fraction` entries forced to zero.
std::vector<double> random_simplex(Rng& rng, std::size_t n, double zero_fraction = 0.3);

using History = std::vector<std::pair<std::size_t, std::size_t>>;  // (action, observation)

struct Enumerated {
    std::vector<double> joint;  // P(x_T = x, z_{1:T} | a_{1:T}), unnormalized posterior
    double evidence = 0.0;      // P(z_{1:T} | a_{1:T})
};

/// Sums over every state trajectory x_0..x_T.
Enumerated enumerate_history(const TabularPOMDP& pomdp, const History& history);

/// Histories drawn by simulating the POMDP with uniformly random actions.
History sample_history(const TabularPOMDP& pomdp, std::size_t length, Rng& rng);

/// Library of `k` random tasks with between 2 and `max_states` states each,
/// sharing action and observation counts. Policies are a single zero vector.
TaskLibrary random_library(Rng& rng, std::size_t k, std::size_t max_states, std::size_t na, std::size_t nz);

/// P[M = m_k | h] proportional to prior_k * P_k(z_{1:T} | a_{1:T}), by trajectory enumeration.
std::vector<double> task_posterior_oracle(const TaskLibrary& library, std::span<const double> prior,
                                          const History& history);

/// One-step lookahead q(b, a) with the alpha vectors as leaf evaluator,
/// enumerating every (x, x', z).
double expectimax_q(const TabularPOMDP& m, const AlphaVectorPolicy& p, const Belief& b, std::size_t a);

struct ChiSquared {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    /// Observed mass outside the expected support.
    bool support_ok = true;
};

/// Goodness of fit of counts to probabilities. Bins with expected count
/// below 5 are pooled.
ChiSquared chi_squared(const std::vector<std::size_t>& counts, const std::vector<double>& probs);

/// Upper tail probability of a chi-squared statistic.
double chi_squared_p(double statistic, std::size_t dof);

/// Optimal finite-horizon values of an MDP by backward induction.
std::vector<double> finite_horizon_values(const TabularMDP& mdp, std::size_t horizon);

/// Breadth-first distances on a torus or bounded grid avoiding one blocked cell.
int bfs_grid_distance(int width, int height, bool torus, std::pair<int, int> from, std::pair<int, int> to,
                      std::optional<std::pair<int, int>> blocked);

/// Fewest ad hoc moves to capture in noise-free night-time pursuit, written
/// independently of the environment code. -1 when unreachable.
int night_pursuit_bfs(int width, int height, std::pair<int, int> prey0, std::pair<int, int> prey1,
                      std::pair<int, int> ad_hoc, std::pair<int, int> teammate);

}  // namespace atpo::testing
