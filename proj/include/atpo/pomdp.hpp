#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "atpo/kernel.hpp"
#include "atpo/mdp.hpp"

namespace atpo {

/// Probability vector over a model's states.
class Belief {
public:
    Belief() = default;
    explicit Belief(std::vector<double> probs);

    static Belief point(std::size_t num_states, std::size_t state);
    static Belief uniform(std::size_t num_states);
    static Belief uniform_over(std::size_t num_states, std::span<const std::size_t> support);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t x) const { return probs_[x]; }
    std::span<const double> probs() const { return probs_; }

    /// Index of the largest entry; lowest index on ties.
    std::size_t most_likely() const;

    bool operator==(const Belief&) const = default;

private:
    std::vector<double> probs_;
};

/// POMDP: an MDP plus observation kernel O[a][x'][z] and initial belief.
class TabularPOMDP {
public:
    TabularPOMDP(TabularMDP base, StochasticKernel observation, Belief initial_belief);

    const TabularMDP& base() const { return base_; }
    const StochasticKernel& observation() const { return observation_; }
    const Belief& initial_belief() const { return initial_belief_; }

    std::size_t num_states() const { return base_.num_states(); }
    std::size_t num_actions() const { return base_.num_actions(); }
    std::size_t num_observations() const { return observation_.num_cols(); }
    double discount() const { return base_.discount(); }

    /// True when every O[a][x'] is a point mass on z = x'.
    bool has_identity_observations() const;

    bool operator==(const TabularPOMDP&) const = default;

private:
    TabularMDP base_;
    StochasticKernel observation_;
    Belief initial_belief_;
};

struct FilterResult {
    /// Posterior; empty when the observation has probability zero.
    std::optional<Belief> belief;
    /// Pre-normalization mass sum_{x,x'} b(x) P(x'|x,a) O(z|x',a).
    double likelihood = 0.0;

    bool possible() const { return belief.has_value(); }
};

FilterResult belief_update(const TabularPOMDP& pomdp, const Belief& b, std::size_t action,
                           std::size_t observation);

struct AlphaVector {
    std::vector<double> values;
    std::size_t action = 0;

    bool operator==(const AlphaVector&) const = default;
};

/// Piecewise-linear convex value function: max over action-labelled vectors.
class AlphaVectorPolicy {
public:
    explicit AlphaVectorPolicy(std::vector<AlphaVector> vectors);

    std::size_t num_states() const { return num_states_; }
    std::size_t size() const { return actions_.size(); }
    std::span<const double> alpha(std::size_t i) const { return {data_.data() + i * num_states_, num_states_}; }
    std::size_t action(std::size_t i) const { return actions_[i]; }
    std::vector<AlphaVector> vectors() const;

    /// Index of the vector with the largest inner product (lowest index on
    /// ties) and that product.
    std::pair<std::size_t, double> best(std::span<const std::size_t> support,
                                        std::span<const double> weights) const;
    double value(std::span<const double> b) const;

    bool operator==(const AlphaVectorPolicy&) const = default;

private:
    std::size_t num_states_ = 0;
    std::vector<double> data_;
    std::vector<std::size_t> actions_;
};

double value_of(const AlphaVectorPolicy& policy, const Belief& b);

/// Q-value of one action under the belief-MDP one-step lookahead.
double q_value(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const Belief& b, std::size_t action);
std::vector<double> q_values(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const Belief& b);

/// Uniform distribution over argmax_a q_value(b, a).
std::vector<double> greedy_belief_policy(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy,
                                         const Belief& b);

/// Default belief-set size: 10 * sqrt(|X|), capped at 2000.
std::size_t default_belief_count(std::size_t num_states);

/// Beliefs visited by random-action trajectories from the initial belief.
/// The first element is always the initial belief.
std::vector<Belief> sample_belief_set(const TabularPOMDP& pomdp, std::size_t n, std::uint64_t seed,
                                      std::size_t trajectory_length = 50);

/// Point beliefs at every state reachable from the initial belief's support.
/// For identity-observation models these are exactly the reachable beliefs.
std::vector<Belief> reachable_point_beliefs(const TabularPOMDP& pomdp);

struct PerseusOptions {
    double improvement_tol = 1e-4;
    std::size_t max_rounds = 1000;
    std::uint64_t seed = 0;
};

struct PerseusResult {
    AlphaVectorPolicy policy;
    /// round_values[n][i]: value of belief i after round n (round 0 is the
    /// initial lower bound).
    std::vector<std::vector<double>> round_values;
    bool converged = false;
};

/// Randomized point-based value iteration over a fixed belief set.
PerseusResult perseus_solve(const TabularPOMDP& pomdp, std::span<const Belief> beliefs,
                            const PerseusOptions& options = {});

namespace detail {

struct SparseVector {
    std::vector<std::size_t> index;
    std::vector<double> value;
};

/// Unnormalized successor belief for one observation.
struct ObservationBranch {
    std::size_t observation = 0;
    double likelihood = 0.0;
    SparseVector mass;
};

SparseVector support_of(std::span<const double> b);

/// All observations with non-zero probability after taking `action` in
/// belief `b`, in increasing observation order.
std::vector<ObservationBranch> branches(const TabularPOMDP& pomdp, const SparseVector& b, std::size_t action);

}  // namespace detail

}  // namespace atpo
