#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "atpo/env/environment.hpp"
#include "atpo/harness/config.hpp"
#include "atpo/mdp.hpp"
#include "atpo/task_inference.hpp"

namespace atpo::harness {

/// Everything the agents need about one pool task.
struct SolvedTask {
    std::string label;
    env::DomainPtr simulator;
    StateValueFunction values;
    /// Greedy on the MDP values: uniform ties (BOPA, Assistant) and
    /// lowest-index ties (omniscient VI).
    StatePolicy mdp_policy;
    StatePolicy vi_policy;
    bool perseus_converged = false;
    bool from_cache = false;
    double setup_seconds = 0.0;
};

struct SolvedLibrary {
    std::string hash;
    std::vector<SolvedTask> tasks;
    /// The pool as a task library, in pool order.
    TaskLibrary pool;
};

/// Simulators of the pool tasks, in pool order.
std::vector<env::DomainPtr> make_domains(const ExperimentConfig& config);

/// Belief set Perseus is run on for this model.
std::vector<Belief> perseus_beliefs(const TabularPOMDP& pomdp, const SolverConfig& solver);

/// Builds every pool task, solves it with Perseus and value iteration, and
/// caches model and policy under `cache_root/<model-hash>/`. Cached files
/// that fail to load or no longer match the built model are rebuilt.
SolvedLibrary solve_library(const ExperimentConfig& config, const std::filesystem::path& cache_root,
                            std::ostream* log = nullptr);

/// Sub-library with the given pool indices, in that order.
TaskLibrary sub_library(const SolvedLibrary& solved, const std::vector<std::size_t>& indices);

}  // namespace atpo::harness
