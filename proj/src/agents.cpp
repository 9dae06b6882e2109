#include "atpo/agents.hpp"

namespace atpo {

TransitionRecord make_record(const InformationGrant& grant, std::size_t own_action, std::size_t observation,
                             std::size_t prev_state, std::size_t state, std::size_t teammate_action) {
    TransitionRecord r;
    r.own_action = own_action;
    r.observation = observation;
    if (grant.state) {
        r.prev_state = prev_state;
        r.state = state;
    }
    if (grant.teammate_action) r.teammate_action = teammate_action;
    return r;
}

namespace {

std::size_t require(const std::optional<std::size_t>& field, const char* what, const std::string& agent) {
    if (!field) throw AgentError(agent + " agent needs " + what);
    return *field;
}

void normalize_or_reset(std::vector<double>& w, std::size_t& resets) {
    double total = 0.0;
    for (double v : w) total += v;
    if (total > 0.0) {
        for (double& v : w) v /= total;
        return;
    }
    ++resets;
    w.assign(w.size(), 1.0 / static_cast<double>(w.size()));
}

}  // namespace

ValueIterationAgent::ValueIterationAgent(StatePolicy policy) : policy_(std::move(policy)) {}

void ValueIterationAgent::reset(std::optional<std::size_t> initial_state) {
    state_ = require(initial_state, "the initial state", name());
}

std::size_t ValueIterationAgent::act(Rng& rng) { return rng.categorical(policy_.row(state_)); }

void ValueIterationAgent::observe(const TransitionRecord& record) { state_ = require(record.state, "the state", name()); }

PerseusAgent::PerseusAgent(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy)
    : pomdp_(pomdp), policy_(policy), belief_(pomdp.initial_belief()) {}

void PerseusAgent::reset(std::optional<std::size_t>) { belief_ = pomdp_.initial_belief(); }

std::size_t PerseusAgent::act(Rng& rng) { return rng.categorical(greedy_belief_policy(pomdp_, policy_, belief_)); }

void PerseusAgent::observe(const TransitionRecord& record) {
    auto filtered = belief_update(pomdp_, belief_, record.own_action, record.observation);
    if (!filtered.possible()) {
        throw InconsistentHistoryError("observation " + std::to_string(record.observation) +
                                       " is impossible under the known task");
    }
    belief_ = std::move(*filtered.belief);
}

AtpoAgent::AtpoAgent(const TaskLibrary& library, AtpoOptions options, ActionSelection selection)
    : library_(library), options_(options), selection_(selection), state_(atpo_init(library)) {}

void AtpoAgent::reset(std::optional<std::size_t>) { state_ = atpo_init(library_); }

std::size_t AtpoAgent::act(Rng& rng) { return atpo_act(state_, library_, rng, selection_).action; }

void AtpoAgent::observe(const TransitionRecord& record) {
    state_ = atpo_update(state_, library_, record.own_action, record.observation, options_);
}

std::optional<std::vector<double>> AtpoAgent::task_posterior() const {
    const auto p = state_.posterior.probs();
    return std::vector<double>(p.begin(), p.end());
}

BopaAgent::BopaAgent(const TaskLibrary& library, std::vector<StatePolicy> mdp_policies, BopaOptions options)
    : library_(library), policies_(std::move(mdp_policies)), options_(options) {
    if (policies_.size() != library_.size()) throw AgentError("bopa needs one MDP policy per task");
    reset(std::nullopt);
}

void BopaAgent::reset(std::optional<std::size_t>) {
    const std::size_t K = library_.size();
    posterior_.assign(K, 1.0 / static_cast<double>(K));
    beliefs_.clear();
    guesses_.clear();
    for (std::size_t k = 0; k < K; ++k) {
        beliefs_.push_back(library_[k].pomdp.initial_belief());
        guesses_.push_back(beliefs_.back().most_likely());
    }
}

std::size_t BopaAgent::act(Rng& rng) {
    if (!options_.mix) {
        const std::size_t k = rng.categorical(posterior_);
        return rng.categorical(policies_[k].row(guesses_[k]));
    }
    std::vector<double> mixed(num_actions(), 0.0);
    for (std::size_t k = 0; k < posterior_.size(); ++k) {
        const auto row = policies_[k].row(guesses_[k]);
        for (std::size_t a = 0; a < mixed.size(); ++a) mixed[a] += posterior_[k] * row[a];
    }
    return rng.categorical(mixed);
}

void BopaAgent::observe(const TransitionRecord& record) {
    const std::size_t a = record.own_action;
    for (std::size_t k = 0; k < library_.size(); ++k) {
        const auto& pomdp = library_[k].pomdp;
        auto filtered = belief_update(pomdp, beliefs_[k], a, record.observation);
        if (filtered.possible()) beliefs_[k] = std::move(*filtered.belief);
        const std::size_t next = beliefs_[k].most_likely();
        posterior_[k] *= pomdp.base().transition().at(a, guesses_[k], next);
        guesses_[k] = next;
    }
    normalize_or_reset(posterior_, resets_);
}

AssistantAgent::AssistantAgent(std::vector<TeammatePolicy> teammates, std::vector<StatePolicy> mdp_policies)
    : teammates_(std::move(teammates)), policies_(std::move(mdp_policies)) {
    if (teammates_.empty() || teammates_.size() != policies_.size()) {
        throw AgentError("assistant needs one teammate model and one MDP policy per task");
    }
    posterior_.assign(policies_.size(), 1.0 / static_cast<double>(policies_.size()));
}

void AssistantAgent::reset(std::optional<std::size_t> initial_state) {
    state_ = require(initial_state, "the initial state", name());
    posterior_.assign(policies_.size(), 1.0 / static_cast<double>(policies_.size()));
}

std::size_t AssistantAgent::act(Rng& rng) {
    std::vector<double> mixed(num_actions(), 0.0);
    for (std::size_t k = 0; k < posterior_.size(); ++k) {
        if (posterior_[k] == 0.0) continue;
        const auto row = policies_[k].row(state_);
        for (std::size_t a = 0; a < mixed.size(); ++a) mixed[a] += posterior_[k] * row[a];
    }
    return rng.categorical(mixed);
}

void AssistantAgent::observe(const TransitionRecord& record) {
    const std::size_t prev = require(record.prev_state, "the previous state", name());
    const std::size_t b = require(record.teammate_action, "the teammate action", name());
    for (std::size_t k = 0; k < posterior_.size(); ++k) {
        posterior_[k] *= teammates_[k].given(record.own_action).prob(prev, b);
    }
    normalize_or_reset(posterior_, resets_);
    state_ = require(record.state, "the state", name());
}

RandomAgent::RandomAgent(std::size_t num_actions) : num_actions_(num_actions) {
    if (num_actions_ == 0) throw AgentError("random agent needs at least one action");
}

}  // namespace atpo
