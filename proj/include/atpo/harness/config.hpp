#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "atpo/env/night_pursuit.hpp"
#include "atpo/env/overcooked.hpp"
#include "atpo/env/pursuit_po.hpp"

namespace atpo::harness {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DomainKind { NightPursuit, PursuitPO, Overcooked };

std::string to_string(DomainKind kind);

enum class TargetMode {
    /// Every library task is the target for trials_per_task trials.
    Each,
    /// Each trial draws its library (when smaller than the pool) and target.
    Random,
};

enum class SweepAxis { None, States, Epsilon, NumTasks };

std::string to_string(SweepAxis axis);

struct SolverConfig {
    /// Perseus belief-set size; 0 selects the default for the state count.
    std::size_t belief_count = 0;
    double improvement_tol = 1e-4;
    std::size_t max_rounds = 1000;
    double vi_tol = 1e-8;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    DomainKind domain = DomainKind::NightPursuit;

    int width = 5;
    int height = 5;
    double epsilon = 0.3;
    double noise_intercept = 1.0;
    double noise_slope = 0.15;

    /// Night-time pursuit: when `night_tasks` is empty the pool holds
    /// `pool_size` prey pairs drawn with `pool_seed`.
    std::vector<std::array<env::Cell, 2>> night_tasks;
    std::size_t pool_size = 4;
    std::uint64_t pool_seed = 7;
    std::vector<env::PursuitTeammate> pursuit_tasks;
    std::vector<env::OvercookedTask> overcooked_tasks;

    /// Library size per trial; 0 means the whole pool.
    std::size_t num_tasks = 0;
    TargetMode target = TargetMode::Each;

    std::vector<std::string> agents;
    std::size_t horizon = 50;
    std::size_t trials_per_task = 32;
    std::size_t trials = 32;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool write_traces = true;
    std::optional<double> posterior_floor;
    bool bopa_mix = false;

    SweepAxis sweep = SweepAxis::None;
    std::vector<double> sweep_values;

    SolverConfig solver;
    std::string cache_dir = "cache";
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Copy of `config` at one sweep value, with the sweep cleared.
ExperimentConfig at_sweep_point(const ExperimentConfig& config, double value);

/// Pool of candidate tasks described by the config, in pool order.
std::size_t pool_size(const ExperimentConfig& config);

/// Hash of everything that determines the solved models and policies.
std::string model_hash(const ExperimentConfig& config);
/// Hash of the whole experiment description.
std::string config_hash(const ExperimentConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace atpo::harness
