#include "atpo/task_inference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "atpo/csv.hpp"

namespace atpo {

TaskLibrary::TaskLibrary(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
    if (tasks_.empty()) throw ModelError("task library is empty");
    for (const auto& t : tasks_) {
        if (t.pomdp.num_actions() != num_actions()) throw ModelError("tasks disagree on the action alphabet");
        if (t.pomdp.num_observations() != num_observations()) {
            throw ModelError("tasks disagree on the observation alphabet");
        }
        if (t.policy.num_states() != t.pomdp.num_states()) {
            throw ModelError("policy of task '" + t.label + "' has the wrong state count");
        }
    }
}

std::vector<std::string> TaskLibrary::labels() const {
    std::vector<std::string> out;
    for (const auto& t : tasks_) out.push_back(t.label);
    return out;
}

double TaskLibrary::reward_bound() const {
    double r = 0.0;
    for (const auto& t : tasks_) r = std::max(r, t.pomdp.base().reward_bound());
    return r;
}

double TaskLibrary::discount() const {
    double g = 0.0;
    for (const auto& t : tasks_) g = std::max(g, t.pomdp.discount());
    return g;
}

TaskPosterior::TaskPosterior(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ModelError("task posterior over zero tasks");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw ModelError("negative task probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) throw ModelError("task posterior sums to " + std::to_string(sum));
}

TaskPosterior TaskPosterior::uniform(std::size_t k) {
    return TaskPosterior(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

TaskPosterior TaskPosterior::point(std::size_t k, std::size_t index) {
    std::vector<double> p(k, 0.0);
    p.at(index) = 1.0;
    return TaskPosterior(std::move(p));
}

std::size_t TaskPosterior::most_likely() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double posterior_entropy(const TaskPosterior& p) {
    double h = 0.0;
    for (double v : p.probs()) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
    double kl = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        if (p[k] == 0.0) return std::numeric_limits<double>::infinity();
        kl += q[k] * std::log(q[k] / p[k]);
    }
    return kl;
}

AtpoState atpo_init(const TaskLibrary& library, const std::optional<TaskPosterior>& prior) {
    AtpoState state;
    state.posterior = prior ? *prior : TaskPosterior::uniform(library.size());
    if (state.posterior.size() != library.size()) throw ModelError("prior size does not match the library");
    for (std::size_t k = 0; k < library.size(); ++k) state.beliefs.push_back(library[k].pomdp.initial_belief());
    state.rejected.assign(library.size(), 0);
    state.task_policies.assign(library.size(), {});
    return state;
}

std::vector<double> task_policy(const AtpoState& state, const TaskLibrary& library, std::size_t k) {
    if (!state.task_policies.empty() && !state.task_policies[k].empty()) return state.task_policies[k];
    return greedy_belief_policy(library[k].pomdp, library[k].policy, state.beliefs[k]);
}

AtpoDecision atpo_act(AtpoState& state, const TaskLibrary& library, Rng& rng, ActionSelection selection) {
    const std::size_t na = library.num_actions();
    std::vector<double> mixed(na, 0.0);
    state.task_policies.assign(library.size(), {});
    for (std::size_t k = 0; k < library.size(); ++k) {
        const double w = state.posterior[k];
        if (w == 0.0) continue;  // contributes exactly zero
        state.task_policies[k] = greedy_belief_policy(library[k].pomdp, library[k].policy, state.beliefs[k]);
        for (std::size_t a = 0; a < na; ++a) mixed[a] += state.task_policies[k][a] * w;
    }
    AtpoDecision decision;
    if (selection == ActionSelection::Sample) {
        decision.action = rng.categorical(mixed);
    } else {
        decision.action = static_cast<std::size_t>(std::max_element(mixed.begin(), mixed.end()) - mixed.begin());
    }
    decision.mixed_policy = mixed;
    state.last_mixed_policy = std::move(mixed);
    return decision;
}

AtpoState atpo_update(const AtpoState& state, const TaskLibrary& library, std::size_t action,
                      std::size_t observation, const AtpoOptions& options) {
    const std::size_t K = library.size();
    AtpoState next = state;
    next.task_policies.assign(K, {});
    next.last_likelihoods.assign(K, 0.0);
    next.last_action_prob = state.last_mixed_policy.empty() ? 0.0 : state.last_mixed_policy.at(action);

    std::vector<double> weights(K, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        if (state.rejected[k]) continue;
        auto filtered = belief_update(library[k].pomdp, state.beliefs[k], action, observation);
        next.last_likelihoods[k] = filtered.likelihood;
        if (filtered.possible()) {
            next.beliefs[k] = std::move(*filtered.belief);
        } else {
            next.rejected[k] = 1;
        }
        // The common factor pi_t(a | h_t) cancels in the normalization.
        weights[k] = filtered.likelihood * state.posterior[k];
        total += weights[k];
    }
    if (!(total > 0.0)) {
        throw InconsistentHistoryError("no task in the library explains observation " + std::to_string(observation) +
                                       " after action " + std::to_string(action));
    }
    for (double& w : weights) w /= total;
    if (options.posterior_floor) {
        double sum = 0.0;
        for (double& w : weights) {
            w = std::max(w, *options.posterior_floor);
            sum += w;
        }
        for (double& w : weights) w /= sum;
    }
    next.posterior = TaskPosterior(std::move(weights));
    return next;
}

std::vector<double> action_losses(const AtpoState& state, const TaskLibrary& library, std::size_t target) {
    const Task& task = library[target];
    const auto q = q_values(task.pomdp, task.policy, state.beliefs[target]);
    // v^{pi}(b) = sum_a pi(a|b) q(b,a) = max_a q(b,a) for the greedy policy.
    const double v = *std::max_element(q.begin(), q.end());
    std::vector<double> losses(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) losses[a] = v - q[a];
    return losses;
}

std::vector<double> atpo_loss(const AtpoState& state, const TaskLibrary& library, std::size_t target) {
    const auto per_action = action_losses(state, library, target);
    std::vector<double> out(library.size(), 0.0);
    for (std::size_t k = 0; k < library.size(); ++k) {
        const auto pi = task_policy(state, library, k);
        double l = 0.0;
        for (std::size_t a = 0; a < pi.size(); ++a) l += pi[a] * per_action[a];
        out[k] = l;
    }
    return out;
}

BoundReport verify_bound(const TraceRecord& trace, const TaskPosterior& q, double r_max, double discount) {
    BoundReport report;
    report.r_max = r_max;
    report.discount = discount;
    report.horizon = trace.steps.size();
    const double T = static_cast<double>(trace.steps.size());
    if (trace.steps.empty()) {
        report.holds = true;
        return report;
    }
    double kl_sum = 0.0;
    for (const auto& step : trace.steps) {
        if (step.posterior.size() != q.size() || step.losses.size() != q.size()) {
            throw ModelError("trace step does not match the comparator size");
        }
        for (std::size_t k = 0; k < q.size(); ++k) {
            report.lhs += step.posterior[k] * step.losses[k];
            report.comparator_loss += q[k] * step.losses[k];
        }
        kl_sum += kl_divergence(q.probs(), step.posterior);
    }
    report.kl_term = std::sqrt(2.0 / T) * kl_sum;
    report.slack_term = std::sqrt(T / 2.0) * r_max * r_max / ((1.0 - discount) * (1.0 - discount));
    report.holds = report.lhs <= report.rhs() + kBoundTolerance;
    return report;
}

void write_trace_csv(std::ostream& out, const TraceRecord& trace) {
    CsvWriter csv(out);
    std::vector<std::string> header{"t", "action", "observation"};
    for (const auto& l : trace.labels) header.push_back("p_" + l);
    header.push_back("entropy");
    for (const auto& l : trace.labels) header.push_back("loss_" + l);
    header.push_back("pi_action");
    header.push_back("reward");
    csv.row(header);
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const auto& s = trace.steps[t];
        std::vector<std::string> cells{std::to_string(t), std::to_string(s.action), std::to_string(s.observation)};
        double h = 0.0;
        for (double p : s.posterior) {
            cells.push_back(format_double(p));
            if (p > 0.0) h -= p * std::log(p);
        }
        cells.push_back(format_double(h));
        for (double l : s.losses) cells.push_back(format_double(l));
        cells.push_back(format_double(s.action_prob));
        cells.push_back(format_double(s.reward));
        csv.row(cells);
    }
}

TraceRecord read_trace_csv(std::istream& in, std::size_t target) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw std::runtime_error("empty trace file");
    const auto& header = rows.front();
    TraceRecord trace;
    trace.target = target;
    for (const auto& h : header) {
        if (h.rfind("p_", 0) == 0) trace.labels.push_back(h.substr(2));
    }
    const std::size_t K = trace.labels.size();
    if (header.size() != 3 + 2 * K + 3) throw std::runtime_error("malformed trace header");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) throw std::runtime_error("trace row " + std::to_string(r) + " has wrong width");
        TraceStep step;
        step.action = std::stoul(row[1]);
        step.observation = std::stoul(row[2]);
        for (std::size_t k = 0; k < K; ++k) step.posterior.push_back(parse_double(row[3 + k]));
        for (std::size_t k = 0; k < K; ++k) step.losses.push_back(parse_double(row[4 + K + k]));
        step.action_prob = parse_double(row[4 + 2 * K]);
        step.reward = parse_double(row[5 + 2 * K]);
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace atpo
