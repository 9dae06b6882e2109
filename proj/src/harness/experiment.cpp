#include "atpo/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "atpo/csv.hpp"

namespace atpo::harness {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<double> TrialRecord::final_entropy() const {
    if (posteriors.empty()) return std::nullopt;
    return posterior_entropy(TaskPosterior(posteriors.back()));
}

std::optional<bool> TrialRecord::identified() const {
    if (posteriors.empty()) return std::nullopt;
    const auto& p = posteriors.back();
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == target_index;
}

Interval summarize(const std::vector<double>& values) {
    Interval out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(out.n);
    if (out.n < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double s = std::sqrt(ss / static_cast<double>(out.n - 1));
    out.half_width = 1.96 * s / std::sqrt(static_cast<double>(out.n));
    return out;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::size_t trial) {
    return derive_seed(derive_seed(master, point), trial);
}

std::size_t num_trials(const ExperimentConfig& config, std::size_t pool) {
    return config.target == TargetMode::Each ? pool * config.trials_per_task : config.trials;
}

TrialDraw draw_trial(const ExperimentConfig& config, std::size_t pool, std::size_t point, std::size_t trial) {
    TrialDraw draw;
    if (config.target == TargetMode::Each) {
        draw.library.resize(pool);
        for (std::size_t i = 0; i < pool; ++i) draw.library[i] = i;
        draw.target = trial / config.trials_per_task;
        return draw;
    }
    Rng rng(derive_seed(trial_seed(config.seed, point, trial), 3));
    std::vector<std::size_t> order(pool);
    for (std::size_t i = 0; i < pool; ++i) order[i] = i;
    const std::size_t m = config.num_tasks;
    if (m < pool) {
        for (std::size_t i = 0; i < m; ++i) std::swap(order[i], order[i + rng.below(pool - i)]);
        order.resize(m);
    }
    draw.library = std::move(order);
    draw.target = rng.below(draw.library.size());
    return draw;
}

AgentPtr make_agent(const std::string& name, const ExperimentConfig& config, const SolvedLibrary& solved,
                    const TaskLibrary& library, const TrialDraw& draw) {
    const SolvedTask& target = solved.tasks.at(draw.library.at(draw.target));
    if (name == "vi") return std::make_unique<ValueIterationAgent>(target.vi_policy);
    if (name == "perseus") {
        return std::make_unique<PerseusAgent>(library[draw.target].pomdp, library[draw.target].policy);
    }
    if (name == "atpo") return std::make_unique<AtpoAgent>(library, AtpoOptions{config.posterior_floor});
    if (name == "bopa") {
        std::vector<StatePolicy> policies;
        for (std::size_t i : draw.library) policies.push_back(solved.tasks[i].mdp_policy);
        return std::make_unique<BopaAgent>(library, std::move(policies), BopaOptions{config.bopa_mix});
    }
    if (name == "assistant") {
        if (config.domain != DomainKind::Overcooked) throw ConfigError("the assistant agent needs overcooked");
        std::vector<TeammatePolicy> teammates;
        std::vector<StatePolicy> policies;
        for (std::size_t i : draw.library) {
            teammates.push_back(solved.tasks[i].simulator->teammate_policy());
            policies.push_back(solved.tasks[i].mdp_policy);
        }
        return std::make_unique<AssistantAgent>(std::move(teammates), std::move(policies));
    }
    if (name == "random") return std::make_unique<RandomAgent>(library.num_actions());
    throw ConfigError("unknown agent '" + name + "'");
}

TrialRecord run_trial(const ExperimentConfig& config, const SolvedLibrary& solved, const std::string& agent_name,
                      std::size_t point, std::optional<double> sweep_value, std::size_t trial) {
    using Clock = std::chrono::steady_clock;
    const std::size_t pool = solved.tasks.size();
    const TrialDraw draw = draw_trial(config, pool, point, trial);
    std::optional<TaskLibrary> owned;
    if (draw.library.size() != pool || !std::is_sorted(draw.library.begin(), draw.library.end())) {
        owned.emplace(sub_library(solved, draw.library));
    }
    const TaskLibrary& library = owned ? *owned : solved.pool;
    const SolvedTask& target = solved.tasks[draw.library[draw.target]];
    const env::Domain& domain = *target.simulator;

    TrialRecord rec;
    rec.config_hash = config_hash(config);
    rec.point = point;
    rec.sweep_value = sweep_value;
    rec.agent = agent_name;
    rec.trial = trial;
    rec.target = target.label;
    rec.target_index = draw.target;
    rec.library = library.labels();

    const std::uint64_t seed = trial_seed(config.seed, point, trial);
    Rng env_rng(derive_seed(seed, 1));
    Rng agent_rng(derive_seed(seed, 2));

    AgentPtr agent = make_agent(agent_name, config, solved, library, draw);
    const auto* atpo = dynamic_cast<const AtpoAgent*>(agent.get());
    const InformationGrant grant = agent->grant();

    env::SimState state = env::reset(domain, env_rng);
    agent->reset(grant.state ? std::optional<std::size_t>(state.state) : std::nullopt);

    TraceRecord trace;
    trace.labels = rec.library;
    trace.target = draw.target;

    for (std::size_t t = 0; t < config.horizon && !state.done; ++t) {
        if (auto p = agent->task_posterior()) rec.posteriors.push_back(std::move(*p));
        const auto start = Clock::now();
        const std::size_t action = agent->act(agent_rng);
        rec.decision_seconds += std::chrono::duration<double>(Clock::now() - start).count();
        if (action >= domain.num_actions()) throw AgentError(agent_name + " returned an invalid action");

        TraceStep step;
        if (atpo) {
            const auto& s = atpo->state();
            step.posterior.assign(s.posterior.probs().begin(), s.posterior.probs().end());
            step.losses = atpo_loss(s, library, draw.target);
            step.action_prob = s.last_mixed_policy.at(action);
        }

        const env::StepOutcome out = env::simulate_step(domain, state, action, env_rng);
        agent->observe(make_record(grant, action, out.observation, out.prev_state, out.next.state,
                                   out.teammate_action));

        rec.actions.push_back(action);
        rec.observations.push_back(out.observation);
        rec.rewards.push_back(out.reward);
        rec.reward += out.reward;
        if (config.domain == DomainKind::Overcooked && out.reward > 0.0) ++rec.soups;
        if (atpo) {
            step.action = action;
            step.observation = out.observation;
            step.reward = out.reward;
            trace.steps.push_back(std::move(step));
        }
        state = out.next;
    }
    if (auto p = agent->task_posterior()) rec.posteriors.push_back(std::move(*p));
    rec.completed = state.done;
    rec.steps = state.done ? state.step : config.horizon;
    if (const auto* bopa = dynamic_cast<const BopaAgent*>(agent.get())) rec.posterior_resets = bopa->resets();
    if (const auto* assistant = dynamic_cast<const AssistantAgent*>(agent.get())) {
        rec.posterior_resets = assistant->resets();
    }

    if (atpo) {
        const std::size_t K = library.size();
        rec.bound_target = verify_bound(trace, TaskPosterior::point(K, draw.target), library.reward_bound(),
                                        library.discount());
        rec.bound_uniform = verify_bound(trace, TaskPosterior::uniform(K), library.reward_bound(), library.discount());
        rec.trace = std::move(trace);
    }
    return rec;
}

namespace {

std::string point_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

template <typename T>
std::string opt_cell(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, bool>) {
        return *v ? "1" : "0";
    } else {
        return format_double(*v);
    }
}

}  // namespace

std::vector<SummaryRow> summarize_records(const std::vector<TrialRecord>& records) {
    struct Key {
        std::size_t point;
        std::string agent;
        std::string target;
        bool operator<(const Key& o) const {
            return std::tie(point, agent, target) < std::tie(o.point, o.agent, o.target);
        }
    };
    std::vector<Key> order;
    std::map<Key, std::vector<const TrialRecord*>> groups;
    std::map<Key, std::optional<double>> sweep;
    for (const auto& r : records) {
        for (const std::string& target : {std::string("all"), r.target}) {
            Key key{r.point, r.agent, target};
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back(&r);
            sweep[key] = r.sweep_value;
        }
    }
    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& group = groups[key];
        auto metric = [&](const std::string& name, auto extract) {
            std::vector<double> values;
            for (const auto* r : group) {
                if (auto v = extract(*r)) values.push_back(*v);
            }
            if (!values.empty()) rows.push_back({key.point, sweep[key], key.agent, key.target, name, summarize(values)});
        };
        metric("steps", [](const TrialRecord& r) { return std::optional<double>(static_cast<double>(r.steps)); });
        metric("completed", [](const TrialRecord& r) { return std::optional<double>(r.completed ? 1.0 : 0.0); });
        metric("reward", [](const TrialRecord& r) { return std::optional<double>(r.reward); });
        metric("soups", [](const TrialRecord& r) { return std::optional<double>(static_cast<double>(r.soups)); });
        metric("final_entropy", [](const TrialRecord& r) { return r.final_entropy(); });
        metric("identified", [](const TrialRecord& r) -> std::optional<double> {
            if (auto v = r.identified()) return *v ? 1.0 : 0.0;
            return std::nullopt;
        });
    }
    return rows;
}

std::vector<EntropyRow> entropy_curves(const std::vector<TrialRecord>& records, std::size_t horizon) {
    std::vector<std::pair<std::size_t, std::string>> order;
    std::map<std::pair<std::size_t, std::string>, std::vector<const TrialRecord*>> groups;
    for (const auto& r : records) {
        if (r.posteriors.empty()) continue;
        const auto key = std::make_pair(r.point, r.agent);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<EntropyRow> rows;
    for (const auto& key : order) {
        const auto& group = groups[key];
        for (std::size_t t = 0; t <= horizon; ++t) {
            std::vector<double> values;
            for (const auto* r : group) {
                const auto& p = r->posteriors[std::min(t, r->posteriors.size() - 1)];
                values.push_back(posterior_entropy(TaskPosterior(p)));
            }
            rows.push_back({key.first, group.front()->sweep_value, key.second, t, summarize(values)});
        }
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& cache_root, bool sweep,
                                std::ostream* log) {
    ExperimentResult result;
    result.config = config;
    std::vector<std::pair<ExperimentConfig, std::optional<double>>> points;
    if (sweep) {
        if (config.sweep == SweepAxis::None) throw ConfigError("config has no sweep axis");
        for (double v : config.sweep_values) points.emplace_back(at_sweep_point(config, v), v);
    } else {
        ExperimentConfig single = config;
        single.sweep = SweepAxis::None;
        single.sweep_values.clear();
        points.emplace_back(single, std::nullopt);
    }

    json timing_points = json::array();
    for (std::size_t point = 0; point < points.size(); ++point) {
        const auto& [pc, value] = points[point];
        if (log) {
            *log << "point " << point;
            if (value) *log << " (" << to_string(config.sweep) << " = " << format_double(*value) << ")";
            *log << ": solving " << pool_size(pc) << " tasks\n";
        }
        const SolvedLibrary solved = solve_library(pc, cache_root, log);
        json setup = json::array();
        for (const auto& t : solved.tasks) {
            setup.push_back({{"task", t.label}, {"seconds", t.setup_seconds}, {"cached", t.from_cache}});
        }
        json agent_timing = json::object();
        const std::size_t n = num_trials(pc, solved.tasks.size());
        for (const auto& agent : pc.agents) {
            std::vector<TrialRecord> batch(n);
            std::vector<std::exception_ptr> errors(n);
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        batch[i] = run_trial(pc, solved, agent, point, value, i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            };
            std::vector<std::thread> threads;
            for (std::size_t w = 1; w < std::min(pc.workers, n); ++w) threads.emplace_back(worker);
            worker();
            for (auto& th : threads) th.join();
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
            double decision = 0.0;
            std::size_t steps = 0;
            for (auto& r : batch) {
                decision += r.decision_seconds;
                steps += r.actions.size();
                result.records.push_back(std::move(r));
            }
            agent_timing[agent] = {{"trials", n},
                                   {"decisions", steps},
                                   {"mean_decision_seconds", steps ? decision / static_cast<double>(steps) : 0.0}};
            if (log) *log << "  " << agent << ": " << n << " trials\n";
        }
        timing_points.push_back({{"point", point},
                                 {"sweep_value", value ? json(*value) : json(nullptr)},
                                 {"setup", setup},
                                 {"agents", agent_timing}});
    }
    result.timings = {{"points", timing_points}};
    return result;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    CsvWriter csv(out);
    csv.row({"config_hash", "point", "sweep_value", "agent", "trial", "target", "library_size", "steps", "completed",
             "reward", "soups", "final_entropy", "identified", "posterior_resets", "bound_target_holds",
             "bound_uniform_holds"});
    for (const auto& r : records) {
        csv.row({r.config_hash, std::to_string(r.point), point_cell(r.sweep_value), r.agent, std::to_string(r.trial),
                 r.target, std::to_string(r.library.size()), std::to_string(r.steps), r.completed ? "1" : "0",
                 format_double(r.reward), std::to_string(r.soups), opt_cell(r.final_entropy()),
                 opt_cell(r.identified()), std::to_string(r.posterior_resets),
                 r.bound_target ? (r.bound_target->holds ? "1" : "0") : "",
                 r.bound_uniform ? (r.bound_uniform->holds ? "1" : "0") : ""});
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    CsvWriter csv(out);
    csv.row({"point", "sweep_value", "agent", "target", "metric", "mean", "ci_half_width", "n"});
    for (const auto& r : rows) {
        csv.row({std::to_string(r.point), point_cell(r.sweep_value), r.agent, r.target, r.metric,
                 format_double(r.value.mean), format_double(r.value.half_width), std::to_string(r.value.n)});
    }
}

void write_entropy_csv(std::ostream& out, const std::vector<EntropyRow>& rows) {
    CsvWriter csv(out);
    csv.row({"point", "sweep_value", "agent", "t", "mean_entropy", "ci_half_width", "n"});
    for (const auto& r : rows) {
        csv.row({std::to_string(r.point), point_cell(r.sweep_value), r.agent, std::to_string(r.t),
                 format_double(r.value.mean), format_double(r.value.half_width), std::to_string(r.value.n)});
    }
}

namespace {

json bound_json(const BoundReport& b) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"lhs", num(b.lhs)},           {"comparator_loss", num(b.comparator_loss)},
            {"kl_term", num(b.kl_term)},   {"slack_term", num(b.slack_term)},
            {"r_max", b.r_max},            {"discount", b.discount},
            {"horizon", b.horizon},        {"holds", b.holds}};
}

BoundReport bound_from_json(const json& j) {
    auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>(); };
    BoundReport b;
    b.lhs = num(j.at("lhs"));
    b.comparator_loss = num(j.at("comparator_loss"));
    b.kl_term = num(j.at("kl_term"));
    b.slack_term = num(j.at("slack_term"));
    b.r_max = j.at("r_max").get<double>();
    b.discount = j.at("discount").get<double>();
    b.horizon = j.at("horizon").get<std::size_t>();
    b.holds = j.at("holds").get<bool>();
    return b;
}

std::string trace_name(const TrialRecord& r) {
    return r.agent + "_p" + std::to_string(r.point) + "_t" + std::to_string(r.trial) + ".csv";
}

}  // namespace

json records_to_json(const std::vector<TrialRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json j{{"config_hash", r.config_hash},
               {"point", r.point},
               {"sweep_value", r.sweep_value ? json(*r.sweep_value) : json(nullptr)},
               {"agent", r.agent},
               {"trial", r.trial},
               {"target", r.target},
               {"library", r.library},
               {"target_index", r.target_index},
               {"steps", r.steps},
               {"completed", r.completed},
               {"reward", r.reward},
               {"soups", r.soups},
               {"actions", r.actions},
               {"observations", r.observations},
               {"rewards", r.rewards},
               {"posteriors", r.posteriors},
               {"posterior_resets", r.posterior_resets}};
        if (r.bound_target) j["bound_target"] = bound_json(*r.bound_target);
        if (r.bound_uniform) j["bound_uniform"] = bound_json(*r.bound_uniform);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<TrialRecord> records_from_json(const json& doc) {
    const json& arr = doc.is_object() ? doc.at("records") : doc;
    std::vector<TrialRecord> out;
    for (const auto& j : arr) {
        TrialRecord r;
        r.config_hash = j.at("config_hash").get<std::string>();
        r.point = j.at("point").get<std::size_t>();
        if (!j.at("sweep_value").is_null()) r.sweep_value = j.at("sweep_value").get<double>();
        r.agent = j.at("agent").get<std::string>();
        r.trial = j.at("trial").get<std::size_t>();
        r.target = j.at("target").get<std::string>();
        r.library = j.at("library").get<std::vector<std::string>>();
        r.target_index = j.at("target_index").get<std::size_t>();
        r.steps = j.at("steps").get<std::size_t>();
        r.completed = j.at("completed").get<bool>();
        r.reward = j.at("reward").get<double>();
        r.soups = j.at("soups").get<std::size_t>();
        r.actions = j.at("actions").get<std::vector<std::size_t>>();
        r.observations = j.at("observations").get<std::vector<std::size_t>>();
        r.rewards = j.at("rewards").get<std::vector<double>>();
        r.posteriors = j.at("posteriors").get<std::vector<std::vector<double>>>();
        r.posterior_resets = j.at("posterior_resets").get<std::size_t>();
        if (j.contains("bound_target")) r.bound_target = bound_from_json(j.at("bound_target"));
        if (j.contains("bound_uniform")) r.bound_uniform = bound_from_json(j.at("bound_uniform"));
        out.push_back(std::move(r));
    }
    return out;
}

void write_outputs(const ExperimentResult& result, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
        return f;
    };
    {
        auto f = open("trials.csv");
        write_trials_csv(f, result.records);
    }
    {
        auto f = open("summary.csv");
        write_summary_csv(f, summarize_records(result.records));
    }
    {
        auto f = open("entropy.csv");
        write_entropy_csv(f, entropy_curves(result.records, result.config.horizon));
    }
    {
        auto f = open("records.json");
        f << json{{"config_hash", config_hash(result.config)},
                  {"horizon", result.config.horizon},
                  {"records", records_to_json(result.records)}}
                 .dump()
          << '\n';
    }
    {
        auto f = open("config.json");
        f << to_json(result.config).dump(2) << '\n';
    }
    {
        auto f = open("timings.json");
        f << result.timings.dump(2) << '\n';
    }
    json index = json::array();
    for (const auto& r : result.records) {
        if (!r.trace || !result.config.write_traces) continue;
        fs::create_directories(out_dir / "traces");
        std::ofstream f(out_dir / "traces" / trace_name(r), std::ios::binary);
        write_trace_csv(f, *r.trace);
        index.push_back({{"file", trace_name(r)},
                         {"target", r.target_index},
                         {"r_max", r.bound_target->r_max},
                         {"discount", r.bound_target->discount}});
    }
    if (!index.empty()) {
        std::ofstream f(out_dir / "traces" / "index.json", std::ios::binary);
        f << index.dump(2) << '\n';
    }
}

BoundCheckSummary check_traces(const fs::path& out_dir, std::ostream* log) {
    const fs::path index_path = out_dir / "traces" / "index.json";
    std::ifstream in(index_path);
    if (!in) throw std::runtime_error("no trace index at " + index_path.string());
    const json index = json::parse(in);
    BoundCheckSummary summary;
    for (const auto& entry : index) {
        const std::string file = entry.at("file").get<std::string>();
        std::ifstream tf(out_dir / "traces" / file);
        if (!tf) throw std::runtime_error("missing trace " + file);
        const std::size_t target = entry.at("target").get<std::size_t>();
        const TraceRecord trace = read_trace_csv(tf, target);
        const double r_max = entry.at("r_max").get<double>();
        const double discount = entry.at("discount").get<double>();
        const std::size_t K = trace.labels.size();
        ++summary.traces;
        for (const auto& q : {TaskPosterior::point(K, target), TaskPosterior::uniform(K)}) {
            const BoundReport report = verify_bound(trace, q, r_max, discount);
            ++summary.checks;
            if (report.holds) {
                ++summary.holds;
            } else if (log) {
                *log << "bound violated in " << file << ": lhs " << format_double(report.lhs) << " > rhs "
                     << format_double(report.rhs()) << '\n';
            }
        }
    }
    return summary;
}

}  // namespace atpo::harness
