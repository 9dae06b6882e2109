#include "atpo/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atpo {

namespace {

void check_discount(double discount) {
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw ModelError("discount must lie in [0, 1), got " + std::to_string(discount));
    }
}

void check_kernel(const StochasticKernel& kernel, const char* what) {
    if (!kernel.entries_valid()) throw ModelError(std::string(what) + " has invalid entries");
    const double err = kernel.max_row_sum_error();
    if (err > kProbabilityTolerance) {
        throw ModelError(std::string(what) + " is not row-stochastic (max error " + std::to_string(err) + ")");
    }
}

double max_abs(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TabularMDP::TabularMDP(StochasticKernel transition, std::vector<double> reward, double discount)
    : transition_(std::move(transition)), reward_(std::move(reward)), discount_(discount) {
    check_discount(discount_);
    if (transition_.num_rows() != transition_.num_cols()) throw ModelError("transition kernel must be square");
    if (transition_.num_rows() == 0 || transition_.num_actions() == 0) throw ModelError("empty MDP");
    check_kernel(transition_, "transition kernel");
    if (reward_.size() != num_states() * num_actions()) throw ModelError("reward has wrong size");
    reward_bound_ = max_abs(reward_);
}

void TabularMDP::set_reward_bound(double bound) {
    if (bound < max_abs(reward_)) throw ModelError("reward bound below max |R|");
    reward_bound_ = bound;
}

TabularMMDP::TabularMMDP(std::vector<std::size_t> per_agent_actions, StochasticKernel joint_transition,
                         std::vector<double> reward, double discount)
    : per_agent_actions_(std::move(per_agent_actions)),
      transition_(std::move(joint_transition)),
      reward_(std::move(reward)),
      discount_(discount) {
    check_discount(discount_);
    if (per_agent_actions_.empty()) throw ModelError("MMDP needs at least one agent");
    std::size_t joint = 1;
    for (std::size_t n : per_agent_actions_) {
        if (n == 0) throw ModelError("agent with no actions");
        joint *= n;
    }
    if (joint != transition_.num_actions()) {
        throw ModelError("joint action count " + std::to_string(transition_.num_actions()) +
                         " differs from the product of per-agent counts " + std::to_string(joint));
    }
    if (transition_.num_rows() != transition_.num_cols()) throw ModelError("transition kernel must be square");
    check_kernel(transition_, "joint transition kernel");
    if (reward_.size() != num_states() * num_joint_actions()) throw ModelError("reward has wrong size");
    reward_bound_ = max_abs(reward_);
}

std::size_t TabularMMDP::joint_index(std::span<const std::size_t> actions) const {
    if (actions.size() != num_agents()) throw ModelError("joint action has wrong arity");
    std::size_t index = 0;
    for (std::size_t n = 0; n < actions.size(); ++n) {
        if (actions[n] >= per_agent_actions_[n]) throw ModelError("action out of range");
        index = index * per_agent_actions_[n] + actions[n];
    }
    return index;
}

std::vector<std::size_t> TabularMMDP::decode_joint(std::size_t joint) const {
    std::vector<std::size_t> actions(num_agents());
    for (std::size_t n = num_agents(); n-- > 0;) {
        actions[n] = joint % per_agent_actions_[n];
        joint /= per_agent_actions_[n];
    }
    return actions;
}

StatePolicy::StatePolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
    if (probs_.size() != num_states_ * num_actions_) throw ModelError("policy has wrong size");
    for (std::size_t x = 0; x < num_states_; ++x) {
        double sum = 0.0;
        for (double p : row(x)) {
            if (!(p >= 0.0)) throw ModelError("negative policy probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbabilityTolerance) {
            throw ModelError("policy row " + std::to_string(x) + " sums to " + std::to_string(sum));
        }
    }
}

StatePolicy StatePolicy::uniform(std::size_t num_states, std::size_t num_actions) {
    return {num_states, num_actions,
            std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions))};
}

StatePolicy StatePolicy::deterministic(std::span<const std::size_t> actions, std::size_t num_actions) {
    std::vector<double> probs(actions.size() * num_actions, 0.0);
    for (std::size_t x = 0; x < actions.size(); ++x) {
        if (actions[x] >= num_actions) throw ModelError("deterministic policy action out of range");
        probs[x * num_actions + actions[x]] = 1.0;
    }
    return {actions.size(), num_actions, std::move(probs)};
}

TeammatePolicy::TeammatePolicy(StatePolicy independent) { by_action_.push_back(std::move(independent)); }

TeammatePolicy::TeammatePolicy(std::vector<StatePolicy> by_ad_hoc_action) : by_action_(std::move(by_ad_hoc_action)) {
    if (by_action_.empty()) throw ModelError("teammate policy needs at least one table");
    for (const auto& p : by_action_) {
        if (p.num_states() != by_action_.front().num_states() ||
            p.num_actions() != by_action_.front().num_actions()) {
            throw ModelError("responsive teammate tables disagree in shape");
        }
    }
}

std::vector<std::size_t> argmax_set(std::span<const double> values) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : values) best = std::max(best, v);
    const double slack = kArgmaxTolerance * std::max(1.0, std::abs(best));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= best - slack) out.push_back(i);
    }
    return out;
}

namespace {

/// One Bellman optimality sweep: fills q and the new values.
void bellman_sweep(const TabularMDP& mdp, std::span<const double> v, std::span<double> q,
                   std::span<double> v_next) {
    const std::size_t nx = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    const double gamma = mdp.discount();
    const auto& T = mdp.transition();
    for (std::size_t x = 0; x < nx; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a) {
            double future = 0.0;
            for (const auto& e : T.row(a, x)) future += e.prob * v[e.col];
            const double value = mdp.reward(x, a) + gamma * future;
            q[x * na + a] = value;
            best = std::max(best, value);
        }
        v_next[x] = best;
    }
}

}  // namespace

StateValueFunction value_iteration(const TabularMDP& mdp, double tol, std::size_t max_iters,
                                   std::vector<double>* residuals) {
    if (!(tol > 0.0)) throw ModelError("value_iteration tolerance must be positive");
    const std::size_t nx = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    std::vector<double> v(nx, 0.0), v_next(nx, 0.0), q(nx * na, 0.0);
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iters; ++it) {
        bellman_sweep(mdp, v, q, v_next);
        change = 0.0;
        for (std::size_t x = 0; x < nx; ++x) change = std::max(change, std::abs(v_next[x] - v[x]));
        if (residuals) residuals->push_back(change);
        v.swap(v_next);
        if (change <= tol) {
            // v = max_a q holds exactly; the Bellman residual of v is at most gamma * change.
            return {std::move(v), std::move(q), na};
        }
    }
    throw ConvergenceError("value_iteration did not converge (last change " + std::to_string(change) + ")",
                           change, max_iters);
}

StatePolicy greedy_policy(const StateValueFunction& vf, TieBreak tie) {
    if (!vf.has_q()) throw ModelError("greedy_policy needs a q cache");
    const std::size_t na = vf.num_actions;
    const std::size_t nx = vf.values.size();
    std::vector<double> probs(nx * na, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        const auto best = argmax_set(std::span<const double>(vf.q).subspan(x * na, na));
        if (tie == TieBreak::LowestIndex) {
            probs[x * na + best.front()] = 1.0;
        } else {
            const double w = 1.0 / static_cast<double>(best.size());
            for (std::size_t a : best) probs[x * na + a] = w;
        }
    }
    return {nx, na, std::move(probs)};
}

TabularMDP reduce_mmdp(const TabularMMDP& mmdp, std::size_t ad_hoc_index, const TeammatePolicy& teammate_policy) {
    if (ad_hoc_index >= mmdp.num_agents()) throw ModelError("ad hoc index out of range");
    const auto counts = mmdp.per_agent_actions();
    std::size_t reduced = 1;
    for (std::size_t n = 0; n < counts.size(); ++n) {
        if (n != ad_hoc_index) reduced *= counts[n];
    }
    if (teammate_policy.num_actions() != reduced || teammate_policy.num_states() != mmdp.num_states()) {
        throw ModelError("teammate policy is " + std::to_string(teammate_policy.num_states()) + "x" +
                         std::to_string(teammate_policy.num_actions()) + ", expected " +
                         std::to_string(mmdp.num_states()) + "x" + std::to_string(reduced));
    }

    const std::size_t nx = mmdp.num_states();
    const std::size_t na = counts[ad_hoc_index];
    // joint_of[a][r]: joint index of ad hoc action a combined with reduced action r.
    std::vector<std::size_t> joint_of(na * reduced);
    std::vector<std::size_t> actions(counts.size());
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t r = 0; r < reduced; ++r) {
            std::size_t rest = r;
            for (std::size_t n = counts.size(); n-- > 0;) {
                if (n == ad_hoc_index) continue;
                actions[n] = rest % counts[n];
                rest /= counts[n];
            }
            actions[ad_hoc_index] = a;
            joint_of[a * reduced + r] = mmdp.joint_index(actions);
        }
    }

    StochasticKernel::Builder builder(na, nx, nx);
    std::vector<double> reward(nx * na, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
        const StatePolicy& pi = teammate_policy.given(a);
        for (std::size_t x = 0; x < nx; ++x) {
            double r_sum = 0.0;
            for (std::size_t r = 0; r < reduced; ++r) {
                const double w = pi.prob(x, r);
                if (w == 0.0) continue;
                const std::size_t j = joint_of[a * reduced + r];
                for (const auto& e : mmdp.transition().row(j, x)) builder.add(e.col, w * e.prob);
                r_sum += w * mmdp.reward(x, j);
            }
            reward[x * na + a] = r_sum;
            builder.end_row();
        }
    }
    TabularMDP out(std::move(builder).finish(), std::move(reward), mmdp.discount());
    out.set_reward_bound(std::max(out.reward_bound(), mmdp.reward_bound()));
    return out;
}

StateValueFunction evaluate_policy(const TabularMDP& mdp, const StatePolicy& policy, double tol,
                                   std::size_t max_iters) {
    if (!(tol > 0.0)) throw ModelError("evaluate_policy tolerance must be positive");
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
        throw ModelError("policy shape does not match the MDP");
    }
    const std::size_t nx = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    const auto& T = mdp.transition();
    std::vector<double> v(nx, 0.0), v_next(nx, 0.0), q(nx * na, 0.0);
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iters; ++it) {
        change = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            double value = 0.0;
            for (std::size_t a = 0; a < na; ++a) {
                double future = 0.0;
                for (const auto& e : T.row(a, x)) future += e.prob * v[e.col];
                q[x * na + a] = mdp.reward(x, a) + mdp.discount() * future;
                value += policy.prob(x, a) * q[x * na + a];
            }
            v_next[x] = value;
            change = std::max(change, std::abs(value - v[x]));
        }
        v.swap(v_next);
        if (change <= tol) return {std::move(v), std::move(q), na};
    }
    throw ConvergenceError("evaluate_policy did not converge (last change " + std::to_string(change) + ")",
                           change, max_iters);
}

}  // namespace atpo
