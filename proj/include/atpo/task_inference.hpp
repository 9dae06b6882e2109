#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atpo/pomdp.hpp"
#include "atpo/rng.hpp"

namespace atpo {

/// One candidate task: its induced POMDP, solved policy and a label.
struct Task {
    TabularPOMDP pomdp;
    AlphaVectorPolicy policy;
    std::string label;
};

/// Candidate tasks sharing the ad hoc agent's action and observation
/// alphabets. State spaces may differ between tasks.
class TaskLibrary {
public:
    explicit TaskLibrary(std::vector<Task> tasks);

    std::size_t size() const { return tasks_.size(); }
    const Task& operator[](std::size_t k) const { return tasks_[k]; }
    std::size_t num_actions() const { return tasks_.front().pomdp.num_actions(); }
    std::size_t num_observations() const { return tasks_.front().pomdp.num_observations(); }
    std::vector<std::string> labels() const;

    /// Largest absolute one-step reward across tasks.
    double reward_bound() const;
    /// Largest discount across tasks.
    double discount() const;

private:
    std::vector<Task> tasks_;
};

/// Distribution over the tasks of a library.
class TaskPosterior {
public:
    TaskPosterior() = default;
    explicit TaskPosterior(std::vector<double> probs);

    static TaskPosterior uniform(std::size_t k);
    static TaskPosterior point(std::size_t k, std::size_t index);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t k) const { return probs_[k]; }
    std::span<const double> probs() const { return probs_; }
    std::size_t most_likely() const;

    bool operator==(const TaskPosterior&) const = default;

private:
    std::vector<double> probs_;
};

/// Shannon entropy in nats, with 0 log 0 = 0.
double posterior_entropy(const TaskPosterior& p);

/// KL(q || p) in nats; +infinity when q puts mass where p has none.
double kl_divergence(std::span<const double> q, std::span<const double> p);

class InconsistentHistoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AtpoOptions {
    /// When set, tasks that cannot explain an observation keep this much
    /// posterior mass (before renormalization) instead of being dropped.
    std::optional<double> posterior_floor;
};

struct AtpoState {
    TaskPosterior posterior;
    std::vector<Belief> beliefs;
    /// Tasks whose belief could not be filtered any more; their beliefs are frozen.
    std::vector<char> rejected;
    /// Mixed policy from the last atpo_act; empty before the first call.
    std::vector<double> last_mixed_policy;
    /// Per-task greedy action distributions for the current beliefs, filled
    /// by atpo_act for tasks with non-zero posterior.
    std::vector<std::vector<double>> task_policies;
    /// Observation likelihoods from the last update, and the mixed-policy
    /// probability of the action taken.
    std::vector<double> last_likelihoods;
    double last_action_prob = 0.0;
};

AtpoState atpo_init(const TaskLibrary& library, const std::optional<TaskPosterior>& prior = std::nullopt);

enum class ActionSelection {
    Sample,
    /// Argmax of the mixture, lowest index on ties.
    Argmax,
};

struct AtpoDecision {
    std::size_t action = 0;
    std::vector<double> mixed_policy;
};

/// Mixes the per-task greedy policies by the posterior and picks an action.
AtpoDecision atpo_act(AtpoState& state, const TaskLibrary& library, Rng& rng,
                      ActionSelection selection = ActionSelection::Sample);

/// Bayesian update of per-task beliefs and the task posterior after taking
/// `action` and observing `observation`.
AtpoState atpo_update(const AtpoState& state, const TaskLibrary& library, std::size_t action,
                      std::size_t observation, const AtpoOptions& options = {});

/// Greedy action distribution of task k at its current belief.
std::vector<double> task_policy(const AtpoState& state, const TaskLibrary& library, std::size_t k);

/// Per-action losses l_t(a | m*) under the target task's belief and policy.
std::vector<double> action_losses(const AtpoState& state, const TaskLibrary& library, std::size_t target);

/// Policy-averaged losses l_t(pi_k | m*) for every candidate task k.
std::vector<double> atpo_loss(const AtpoState& state, const TaskLibrary& library, std::size_t target);

struct TraceStep {
    std::size_t action = 0;
    std::size_t observation = 0;
    std::vector<double> posterior;  // p_t
    std::vector<double> losses;     // l_t(pi_k | m*) for each k
    double action_prob = 0.0;       // pi_t(a_t | h_t)
    double reward = 0.0;
};

struct TraceRecord {
    std::vector<std::string> labels;
    std::size_t target = 0;
    std::vector<TraceStep> steps;
};

struct BoundReport {
    double lhs = 0.0;
    double comparator_loss = 0.0;  // sum_t L_t(q)
    double kl_term = 0.0;          // sqrt(2/T) sum_t KL(q || p_t)
    double slack_term = 0.0;       // sqrt(T/2) R_max^2 / (1-gamma)^2
    double r_max = 0.0;
    double discount = 0.0;
    std::size_t horizon = 0;
    bool holds = false;

    double rhs() const { return comparator_loss + kl_term + slack_term; }
};

inline constexpr double kBoundTolerance = 1e-6;

/// Evaluates both sides of the online loss bound for comparator q.
BoundReport verify_bound(const TraceRecord& trace, const TaskPosterior& q, double r_max, double discount);

/// Trace CSV: t,action,observation,p_<label>...,entropy,loss_<label>...,pi_action,reward
void write_trace_csv(std::ostream& out, const TraceRecord& trace);
TraceRecord read_trace_csv(std::istream& in, std::size_t target);

}  // namespace atpo
