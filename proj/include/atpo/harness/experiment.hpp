#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "atpo/agents.hpp"
#include "atpo/harness/config.hpp"
#include "atpo/harness/library.hpp"
#include "atpo/task_inference.hpp"

namespace atpo::harness {

struct TrialRecord {
    std::string config_hash;
    std::size_t point = 0;
    std::optional<double> sweep_value;
    std::string agent;
    std::size_t trial = 0;
    std::string target;
    /// Labels of the library the agent was given; the target's position in it.
    std::vector<std::string> library;
    std::size_t target_index = 0;

    /// Capture step, or the horizon when the episode did not finish.
    std::size_t steps = 0;
    bool completed = false;
    double reward = 0.0;
    std::size_t soups = 0;

    std::vector<std::size_t> actions;
    std::vector<std::size_t> observations;
    std::vector<double> rewards;
    /// posteriors[t] is the task posterior before step t; the last entry is
    /// the posterior after the final step. Empty for agents without one.
    std::vector<std::vector<double>> posteriors;
    std::size_t posterior_resets = 0;

    /// ATPO only: the loss trace and the bound for q = target point mass and q = uniform.
    std::optional<TraceRecord> trace;
    std::optional<BoundReport> bound_target;
    std::optional<BoundReport> bound_uniform;

    /// Wall clock; never part of the deterministic outputs.
    double decision_seconds = 0.0;

    std::optional<double> final_entropy() const;
    /// True when the target has the largest final posterior (lowest index on ties).
    std::optional<bool> identified() const;
};

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;
};

/// Mean and 95% normal-approximation half-width 1.96 s / sqrt(n).
Interval summarize(const std::vector<double>& values);

struct SummaryRow {
    std::size_t point = 0;
    std::optional<double> sweep_value;
    std::string agent;
    std::string target;  // "all" or a task label
    std::string metric;
    Interval value;
};

struct EntropyRow {
    std::size_t point = 0;
    std::optional<double> sweep_value;
    std::string agent;
    std::size_t t = 0;
    Interval value;
};

std::vector<SummaryRow> summarize_records(const std::vector<TrialRecord>& records);
/// Mean posterior entropy per step; finished episodes hold their last posterior.
std::vector<EntropyRow> entropy_curves(const std::vector<TrialRecord>& records, std::size_t horizon);

/// Library and target used by one trial.
struct TrialDraw {
    std::vector<std::size_t> library;  // pool indices
    std::size_t target = 0;            // position in `library`
};

std::size_t num_trials(const ExperimentConfig& config, std::size_t pool);
TrialDraw draw_trial(const ExperimentConfig& config, std::size_t pool, std::size_t point, std::size_t trial);
std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::size_t trial);

AgentPtr make_agent(const std::string& name, const ExperimentConfig& config, const SolvedLibrary& solved,
                    const TaskLibrary& library, const TrialDraw& draw);

TrialRecord run_trial(const ExperimentConfig& config, const SolvedLibrary& solved, const std::string& agent,
                      std::size_t point, std::optional<double> sweep_value, std::size_t trial);

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<TrialRecord> records;
    nlohmann::json timings;
};

/// Runs one configuration (sweep = false) or every point of its sweep.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& cache_root,
                                bool sweep, std::ostream* log = nullptr);

/// trials.csv, summary.csv, entropy.csv, records.json, timings.json,
/// config.json and (for ATPO) traces/.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_entropy_csv(std::ostream& out, const std::vector<EntropyRow>& rows);

nlohmann::json records_to_json(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_json(const nlohmann::json& doc);

struct BoundCheckSummary {
    std::size_t traces = 0;
    std::size_t checks = 0;
    std::size_t holds = 0;
};

/// Re-verifies the loss bound on every trace listed in traces/index.json.
BoundCheckSummary check_traces(const std::filesystem::path& out_dir, std::ostream* log = nullptr);

}  // namespace atpo::harness
