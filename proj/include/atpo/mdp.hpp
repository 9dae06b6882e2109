#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atpo/kernel.hpp"

namespace atpo {

/// Tolerance used when validating probability rows and simplex vectors.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Relative tolerance that decides which actions belong to an argmax set.
inline constexpr double kArgmaxTolerance = 1e-9;

/// Raised when a model, policy or distribution violates its invariants.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by iterative solvers that do not reach their tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const { return residual_; }
    std::size_t iterations() const { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

/// Finite MDP with kernel T[a][x][x'], expected reward R[x][a] and discount.
class TabularMDP {
public:
    TabularMDP(StochasticKernel transition, std::vector<double> reward, double discount);

    std::size_t num_states() const { return transition_.num_rows(); }
    std::size_t num_actions() const { return transition_.num_actions(); }
    double discount() const { return discount_; }

    const StochasticKernel& transition() const { return transition_; }
    double reward(std::size_t x, std::size_t a) const { return reward_[x * num_actions() + a]; }
    std::span<const double> rewards() const { return reward_; }

    /// Bound on the absolute one-step reward. Defaults to max |R[x][a]|;
    /// builders that know the per-transition rewards may raise it.
    double reward_bound() const { return reward_bound_; }
    void set_reward_bound(double bound);

    bool operator==(const TabularMDP&) const = default;

private:
    StochasticKernel transition_;
    std::vector<double> reward_;
    double discount_;
    double reward_bound_;
};

/// Multiagent MDP. Joint actions are indexed row-major over agents: the
/// last agent's action varies fastest.
class TabularMMDP {
public:
    TabularMMDP(std::vector<std::size_t> per_agent_actions, StochasticKernel joint_transition,
                std::vector<double> reward, double discount);

    std::size_t num_agents() const { return per_agent_actions_.size(); }
    std::size_t num_states() const { return transition_.num_rows(); }
    std::size_t num_joint_actions() const { return transition_.num_actions(); }
    std::span<const std::size_t> per_agent_actions() const { return per_agent_actions_; }
    double discount() const { return discount_; }

    const StochasticKernel& transition() const { return transition_; }
    double reward(std::size_t x, std::size_t joint) const { return reward_[x * num_joint_actions() + joint]; }

    std::size_t joint_index(std::span<const std::size_t> actions) const;
    std::vector<std::size_t> decode_joint(std::size_t joint) const;

    double reward_bound() const { return reward_bound_; }
    void set_reward_bound(double bound) { reward_bound_ = bound; }

private:
    std::vector<std::size_t> per_agent_actions_;
    StochasticKernel transition_;
    std::vector<double> reward_;
    double discount_;
    double reward_bound_;
};

/// Stationary stochastic policy pi[x][a].
class StatePolicy {
public:
    StatePolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs);

    static StatePolicy uniform(std::size_t num_states, std::size_t num_actions);
    static StatePolicy deterministic(std::span<const std::size_t> actions, std::size_t num_actions);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    double prob(std::size_t x, std::size_t a) const { return probs_[x * num_actions_ + a]; }
    std::span<const double> row(std::size_t x) const { return {probs_.data() + x * num_actions_, num_actions_}; }

    bool operator==(const StatePolicy&) const = default;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<double> probs_;
};

/// Teammate behavior that may depend on the ad hoc agent's simultaneous
/// action. A single policy means the teammate ignores that action.
class TeammatePolicy {
public:
    TeammatePolicy(StatePolicy independent);  // NOLINT(google-explicit-constructor)
    explicit TeammatePolicy(std::vector<StatePolicy> by_ad_hoc_action);

    const StatePolicy& given(std::size_t ad_hoc_action) const {
        return by_action_.size() == 1 ? by_action_.front() : by_action_.at(ad_hoc_action);
    }
    bool responsive() const { return by_action_.size() > 1; }
    std::size_t num_actions() const { return by_action_.front().num_actions(); }
    std::size_t num_states() const { return by_action_.front().num_states(); }

private:
    std::vector<StatePolicy> by_action_;
};

struct StateValueFunction {
    std::vector<double> values;
    /// Optional q cache, row-major [x][a]; empty when absent.
    std::vector<double> q;
    std::size_t num_actions = 0;

    bool has_q() const { return !q.empty(); }
    double q_at(std::size_t x, std::size_t a) const { return q[x * num_actions + a]; }
};

enum class TieBreak { Uniform, LowestIndex };

/// Bellman optimality iteration until the sup-norm change is at most `tol`.
/// When `residuals` is given, the change of every sweep is appended to it.
StateValueFunction value_iteration(const TabularMDP& mdp, double tol = 1e-8,
                                   std::size_t max_iters = 100000,
                                   std::vector<double>* residuals = nullptr);

StatePolicy greedy_policy(const StateValueFunction& vf, TieBreak tie = TieBreak::Uniform);

/// Folds the teammates' policy into the kernel, leaving a single-agent MDP
/// over the ad hoc agent's actions.
TabularMDP reduce_mmdp(const TabularMMDP& mmdp, std::size_t ad_hoc_index,
                       const TeammatePolicy& teammate_policy);

/// Iterative policy evaluation; the q cache holds q^pi.
StateValueFunction evaluate_policy(const TabularMDP& mdp, const StatePolicy& policy,
                                   double tol = 1e-8, std::size_t max_iters = 100000);

/// Indices achieving the maximum of `values` within kArgmaxTolerance.
std::vector<std::size_t> argmax_set(std::span<const double> values);

}  // namespace atpo
