#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atpo/mdp.hpp"
#include "atpo/pomdp.hpp"
#include "atpo/rng.hpp"
#include "atpo/task_inference.hpp"

namespace atpo {

/// What the environment is allowed to reveal to an agent beyond its own
/// observation.
struct InformationGrant {
    bool state = false;
    bool teammate_action = false;
};

/// One environment step as seen by an agent. Optional fields are filled
/// only when the agent's grant allows it.
struct TransitionRecord {
    std::size_t own_action = 0;
    std::size_t observation = 0;
    std::optional<std::size_t> prev_state;
    std::optional<std::size_t> state;
    std::optional<std::size_t> teammate_action;
};

/// Builds the record an agent with `grant` may see.
TransitionRecord make_record(const InformationGrant& grant, std::size_t own_action, std::size_t observation,
                             std::size_t prev_state, std::size_t state, std::size_t teammate_action);

class AgentError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class Agent {
public:
    virtual ~Agent() = default;

    virtual std::string name() const = 0;
    virtual InformationGrant grant() const { return {}; }
    virtual std::size_t num_actions() const = 0;

    /// Starts an episode. `initial_state` is present iff the grant includes state.
    virtual void reset(std::optional<std::size_t> initial_state) = 0;
    virtual std::size_t act(Rng& rng) = 0;
    virtual void observe(const TransitionRecord& record) = 0;

    /// Current posterior over the library, for agents that keep one.
    virtual std::optional<std::vector<double>> task_posterior() const { return std::nullopt; }
};

using AgentPtr = std::unique_ptr<Agent>;

/// Knows the task and sees the state; greedy on the optimal MDP values with
/// lowest-index ties.
class ValueIterationAgent final : public Agent {
public:
    explicit ValueIterationAgent(StatePolicy policy);

    std::string name() const override { return "vi"; }
    InformationGrant grant() const override { return {true, false}; }
    std::size_t num_actions() const override { return policy_.num_actions(); }
    void reset(std::optional<std::size_t> initial_state) override;
    std::size_t act(Rng& rng) override;
    void observe(const TransitionRecord& record) override;

private:
    StatePolicy policy_;
    std::size_t state_ = 0;
};

/// Knows the task but filters its own observations.
class PerseusAgent final : public Agent {
public:
    PerseusAgent(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy);

    std::string name() const override { return "perseus"; }
    std::size_t num_actions() const override { return pomdp_.num_actions(); }
    void reset(std::optional<std::size_t> initial_state) override;
    std::size_t act(Rng& rng) override;
    void observe(const TransitionRecord& record) override;

    const Belief& belief() const { return belief_; }

private:
    const TabularPOMDP& pomdp_;
    const AlphaVectorPolicy& policy_;
    Belief belief_;
};

class AtpoAgent final : public Agent {
public:
    AtpoAgent(const TaskLibrary& library, AtpoOptions options = {},
              ActionSelection selection = ActionSelection::Sample);

    std::string name() const override { return "atpo"; }
    std::size_t num_actions() const override { return library_.num_actions(); }
    void reset(std::optional<std::size_t> initial_state) override;
    std::size_t act(Rng& rng) override;
    void observe(const TransitionRecord& record) override;
    std::optional<std::vector<double>> task_posterior() const override;

    const AtpoState& state() const { return state_; }

private:
    const TaskLibrary& library_;
    AtpoOptions options_;
    ActionSelection selection_;
    AtpoState state_;
};

struct BopaOptions {
    /// Mix the per-task MDP policies by the posterior instead of sampling a task.
    bool mix = false;
};

/// Most-likely-state heuristic: tracks per-task beliefs but scores tasks by
/// the fully observable transition likelihood between argmax states.
class BopaAgent final : public Agent {
public:
    BopaAgent(const TaskLibrary& library, std::vector<StatePolicy> mdp_policies, BopaOptions options = {});

    std::string name() const override { return "bopa"; }
    std::size_t num_actions() const override { return library_.num_actions(); }
    void reset(std::optional<std::size_t> initial_state) override;
    std::size_t act(Rng& rng) override;
    void observe(const TransitionRecord& record) override;
    std::optional<std::vector<double>> task_posterior() const override { return posterior_; }

    std::span<const std::size_t> most_likely_states() const { return guesses_; }
    /// Number of times every task had zero likelihood and the posterior was reset.
    std::size_t resets() const { return resets_; }

private:
    const TaskLibrary& library_;
    std::vector<StatePolicy> policies_;
    BopaOptions options_;
    std::vector<double> posterior_;
    std::vector<Belief> beliefs_;
    std::vector<std::size_t> guesses_;
    std::size_t resets_ = 0;
};

/// Sees the state and the teammate's action; identifies the teammate by
/// Bayes over the library's teammate policies.
class AssistantAgent final : public Agent {
public:
    AssistantAgent(std::vector<TeammatePolicy> teammates, std::vector<StatePolicy> mdp_policies);

    std::string name() const override { return "assistant"; }
    InformationGrant grant() const override { return {true, true}; }
    std::size_t num_actions() const override { return policies_.front().num_actions(); }
    void reset(std::optional<std::size_t> initial_state) override;
    std::size_t act(Rng& rng) override;
    void observe(const TransitionRecord& record) override;
    std::optional<std::vector<double>> task_posterior() const override { return posterior_; }

    std::size_t resets() const { return resets_; }

private:
    std::vector<TeammatePolicy> teammates_;
    std::vector<StatePolicy> policies_;
    std::vector<double> posterior_;
    std::size_t state_ = 0;
    std::size_t resets_ = 0;
};

class RandomAgent final : public Agent {
public:
    explicit RandomAgent(std::size_t num_actions);

    std::string name() const override { return "random"; }
    std::size_t num_actions() const override { return num_actions_; }
    void reset(std::optional<std::size_t>) override {}
    std::size_t act(Rng& rng) override { return rng.below(num_actions_); }
    void observe(const TransitionRecord&) override {}

private:
    std::size_t num_actions_;
};

}  // namespace atpo
