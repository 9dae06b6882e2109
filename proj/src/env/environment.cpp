#include "atpo/env/environment.hpp"

#include <array>

namespace atpo::env {

TabularMMDP Domain::build_mmdp() const {
    const std::size_t nx = num_states();
    const std::size_t na = num_actions();
    const std::size_t nt = num_teammate_actions();
    std::vector<std::size_t> counts(2);
    const std::size_t self = ad_hoc_index();
    counts[self] = na;
    counts[1 - self] = nt;
    const std::size_t joint = na * nt;

    StochasticKernel::Builder builder(joint, nx, nx);
    std::vector<double> reward(nx * joint, 0.0);
    std::array<std::size_t, 2> actions{};
    for (std::size_t j = 0; j < joint; ++j) {
        actions[0] = j / counts[1];
        actions[1] = j % counts[1];
        const std::size_t a = actions[self];
        const std::size_t b = actions[1 - self];
        for (std::size_t x = 0; x < nx; ++x) {
            double r = 0.0;
            for (const auto& o : joint_outcomes(x, a, b)) {
                builder.add(o.next, o.prob);
                r += o.prob * o.reward;
            }
            reward[x * joint + j] = r;
            builder.end_row();
        }
    }
    TabularMMDP mmdp(std::move(counts), std::move(builder).finish(), std::move(reward), discount());
    mmdp.set_reward_bound(reward_bound());
    return mmdp;
}

TabularPOMDP Domain::build_pomdp() const {
    TabularMDP reduced = reduce_mmdp(build_mmdp(), ad_hoc_index(), teammate_policy());
    StochasticKernel::Builder obs(num_actions(), num_states(), num_observations());
    for (std::size_t a = 0; a < num_actions(); ++a) {
        for (std::size_t y = 0; y < num_states(); ++y) {
            for (const auto& e : observation_distribution(y, a)) obs.add(e.col, e.prob);
            obs.end_row();
        }
    }
    return TabularPOMDP(std::move(reduced), std::move(obs).finish(), initial_belief());
}

std::size_t sample_row(std::span<const double> probs, Rng& rng) { return rng.categorical(probs); }

SimState reset(const Domain& domain, Rng& rng) {
    const Belief b0 = domain.initial_belief();
    SimState s;
    s.state = rng.categorical(b0.probs());
    s.done = domain.is_terminal(s.state);
    return s;
}

StepOutcome simulate_step(const Domain& domain, const SimState& state, std::size_t action, Rng& rng) {
    if (state.done) throw SimulationError("cannot step a finished episode");
    if (action >= domain.num_actions()) throw SimulationError("ad hoc action out of range");
    StepOutcome out;
    out.prev_state = state.state;
    out.teammate_action = rng.categorical(domain.teammate_policy().given(action).row(state.state));
    const auto [next, reward] = domain.sample_joint(state.state, action, out.teammate_action, rng);
    out.observation = domain.sample_observation(next, action, rng);
    out.reward = reward;
    out.done = domain.is_terminal(next);
    out.next = SimState{next, state.step + 1, out.done};
    return out;
}

}  // namespace atpo::env
