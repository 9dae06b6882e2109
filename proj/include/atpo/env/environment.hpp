#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "atpo/kernel.hpp"
#include "atpo/mdp.hpp"
#include "atpo/pomdp.hpp"
#include "atpo/rng.hpp"

namespace atpo::env {

/// Ground-truth simulator state. `state` is the model state index; each
/// domain exposes encode/decode for its structured form.
struct SimState {
    std::size_t state = 0;
    std::size_t step = 0;
    bool done = false;

    bool operator==(const SimState&) const = default;
};

struct StepOutcome {
    SimState next;
    std::size_t observation = 0;
    double reward = 0.0;
    bool done = false;
    std::size_t prev_state = 0;
    std::size_t teammate_action = 0;
};

/// One outcome of a joint action, as enumerated for model building.
struct JointOutcome {
    double prob;
    std::size_t next;
    double reward;
};

class SimulationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A single task of a domain: the two-agent dynamics with the teammate's
/// behavior, the ad hoc agent's sensor, and the initial distribution.
///
/// Model building enumerates `joint_outcomes` / `observation_distribution`;
/// simulation draws from `sample_joint` / `sample_observation`, which each
/// domain implements by sampling its random events directly.
class Domain {
public:
    virtual ~Domain() = default;

    virtual std::string label() const = 0;
    virtual std::size_t num_states() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual std::size_t num_teammate_actions() const = 0;
    virtual std::size_t num_observations() const = 0;
    virtual std::size_t ad_hoc_index() const { return 0; }
    virtual double discount() const { return 0.95; }
    /// Largest absolute one-step reward.
    virtual double reward_bound() const = 0;

    /// Absorbing success states (capture, cornering).
    virtual bool is_terminal(std::size_t x) const = 0;
    virtual Belief initial_belief() const = 0;
    virtual const TeammatePolicy& teammate_policy() const = 0;

    virtual std::vector<JointOutcome> joint_outcomes(std::size_t x, std::size_t action,
                                                     std::size_t teammate_action) const = 0;
    virtual std::vector<KernelEntry> observation_distribution(std::size_t next, std::size_t action) const = 0;

    virtual std::pair<std::size_t, double> sample_joint(std::size_t x, std::size_t action,
                                                        std::size_t teammate_action, Rng& rng) const = 0;
    virtual std::size_t sample_observation(std::size_t next, std::size_t action, Rng& rng) const = 0;

    /// Two-agent model; the agent order is given by ad_hoc_index().
    TabularMMDP build_mmdp() const;
    /// The ad hoc agent's POMDP with the teammate folded in.
    TabularPOMDP build_pomdp() const;
};

using DomainPtr = std::shared_ptr<const Domain>;

struct BuiltTask {
    TabularPOMDP pomdp;
    DomainPtr simulator;
};

SimState reset(const Domain& domain, Rng& rng);

/// Samples the teammate's action, the joint transition and the observation.
StepOutcome simulate_step(const Domain& domain, const SimState& state, std::size_t action, Rng& rng);

/// Samples an index from a kernel row.
std::size_t sample_row(std::span<const double> probs, Rng& rng);

}  // namespace atpo::env
