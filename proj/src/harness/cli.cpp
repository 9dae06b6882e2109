#include "atpo/harness/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "atpo/csv.hpp"
#include "atpo/harness/config.hpp"
#include "atpo/harness/experiment.hpp"
#include "atpo/harness/library.hpp"

namespace atpo::harness {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string cache_dir;
    std::string dest;
};

ExperimentConfig resolved_config(const Options& opts) {
    ExperimentConfig config = load_config(opts.config);
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

fs::path cache_root(const Options& opts, const ExperimentConfig& config) {
    if (!opts.cache_dir.empty()) return opts.cache_dir;
    const fs::path p = config.cache_dir;
    return p.is_absolute() ? p : fs::path(opts.out_dir) / p;
}

void print_summary(std::ostream& out, const std::vector<TrialRecord>& records) {
    for (const auto& row : summarize_records(records)) {
        if (row.target != "all") continue;
        if (row.metric != "steps" && row.metric != "soups" && row.metric != "final_entropy") continue;
        out << "  point " << row.point << "  " << std::left << std::setw(10) << row.agent << std::setw(14)
            << row.metric << format_double(row.value.mean) << " +/- " << format_double(row.value.half_width)
            << " (n=" << row.value.n << ")\n";
    }
}

int cmd_solve(const Options& opts, std::ostream& out) {
    const ExperimentConfig config = resolved_config(opts);
    const fs::path root = cache_root(opts, config);
    std::vector<std::pair<ExperimentConfig, std::string>> points;
    if (config.sweep == SweepAxis::None) {
        points.emplace_back(config, "");
    } else {
        for (double v : config.sweep_values) points.emplace_back(at_sweep_point(config, v), format_double(v));
    }
    for (const auto& [pc, value] : points) {
        out << "solving " << to_string(pc.domain) << (value.empty() ? "" : " at " + to_string(config.sweep) + " = " + value)
            << '\n';
        const SolvedLibrary solved = solve_library(pc, root, &out);
        out << "  cache " << (root / solved.hash).string() << '\n';
    }
    return kExitOk;
}

int cmd_run(const Options& opts, bool sweep, std::ostream& out) {
    const ExperimentConfig config = resolved_config(opts);
    const ExperimentResult result = run_experiment(config, cache_root(opts, config), sweep, &out);
    write_outputs(result, opts.out_dir);
    print_summary(out, result.records);
    out << "wrote " << result.records.size() << " trial records to " << opts.out_dir << '\n';
    return kExitOk;
}

int cmd_bound_check(const Options& opts, std::ostream& out, std::ostream& err) {
    const BoundCheckSummary s = check_traces(opts.out_dir, &err);
    const double pct = s.checks ? 100.0 * static_cast<double>(s.holds) / static_cast<double>(s.checks) : 100.0;
    out << s.traces << " traces, " << s.holds << "/" << s.checks << " bound checks hold (" << format_double(pct)
        << "%)\n";
    return s.holds == s.checks ? kExitOk : kExitRuntimeError;
}

int cmd_export(const Options& opts, std::ostream& out) {
    const fs::path src = fs::path(opts.out_dir) / "records.json";
    std::ifstream in(src);
    if (!in) throw std::runtime_error("no records at " + src.string());
    const auto doc = nlohmann::json::parse(in);
    const auto records = records_from_json(doc);
    const std::size_t horizon = doc.at("horizon").get<std::size_t>();
    const fs::path dest = opts.dest.empty() ? fs::path(opts.out_dir) : fs::path(opts.dest);
    fs::create_directories(dest);
    {
        std::ofstream f(dest / "trials.csv", std::ios::binary);
        write_trials_csv(f, records);
    }
    const auto summary = summarize_records(records);
    {
        std::ofstream f(dest / "summary.csv", std::ios::binary);
        write_summary_csv(f, summary);
    }
    {
        std::ofstream f(dest / "entropy.csv", std::ios::binary);
        write_entropy_csv(f, entropy_curves(records, horizon));
    }
    nlohmann::json js = nlohmann::json::array();
    for (const auto& r : summary) {
        js.push_back({{"point", r.point},
                      {"sweep_value", r.sweep_value ? nlohmann::json(*r.sweep_value) : nlohmann::json(nullptr)},
                      {"agent", r.agent},
                      {"target", r.target},
                      {"metric", r.metric},
                      {"mean", r.value.mean},
                      {"ci_half_width", r.value.half_width},
                      {"n", r.value.n}});
    }
    {
        std::ofstream f(dest / "summary.json", std::ios::binary);
        f << js.dump(2) << '\n';
    }
    out << "exported " << records.size() << " trials to " << dest.string() << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Task inference for ad hoc teamwork under partial observability"};
    app.require_subcommand(1);
    Options opts;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", opts.config, "JSON experiment config");
        if (needs_config) c->required();
        cmd->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "master seed (overrides the config)");
    };
    auto* solve = app.add_subcommand("solve", "build and cache the task library");
    add_common(solve, true);
    solve->add_option("--cache-dir", opts.cache_dir, "cache root (default: <out-dir>/<config cache_dir>)");
    auto* run = app.add_subcommand("run", "run one configuration");
    add_common(run, true);
    run->add_option("--cache-dir", opts.cache_dir, "cache root");
    auto* sweep = app.add_subcommand("sweep", "run every point of the configured sweep");
    add_common(sweep, true);
    sweep->add_option("--cache-dir", opts.cache_dir, "cache root");
    auto* bound = app.add_subcommand("bound-check", "re-verify the loss bound on stored traces");
    add_common(bound, false);
    auto* exp = app.add_subcommand("export", "regenerate CSV and JSON summaries from records.json");
    add_common(exp, false);
    exp->add_option("--dest", opts.dest, "destination directory (default: --out-dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }
    for (auto* cmd : {solve, run, sweep, bound, exp}) {
        if (cmd->parsed() && cmd->count("--seed")) opts.seed = seed;
    }

    try {
        if (solve->parsed()) return cmd_solve(opts, out);
        if (run->parsed()) return cmd_run(opts, false, out);
        if (sweep->parsed()) return cmd_run(opts, true, out);
        if (bound->parsed()) return cmd_bound_check(opts, out, err);
        if (exp->parsed()) return cmd_export(opts, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    return kExitConfigError;
}

}  // namespace atpo::harness
