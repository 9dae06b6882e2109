#include "atpo/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace atpo::harness {

using nlohmann::json;

namespace {

const std::set<std::string> kAgents{"vi", "perseus", "atpo", "bopa", "assistant", "random"};

template <typename T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

DomainKind parse_domain(const std::string& name) {
    if (name == "night_pursuit") return DomainKind::NightPursuit;
    if (name == "pursuit_po") return DomainKind::PursuitPO;
    if (name == "overcooked") return DomainKind::Overcooked;
    throw ConfigError("unknown domain '" + name + "'");
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "none") return SweepAxis::None;
    if (name == "states") return SweepAxis::States;
    if (name == "epsilon") return SweepAxis::Epsilon;
    if (name == "num_tasks") return SweepAxis::NumTasks;
    throw ConfigError("unknown sweep axis '" + name + "'");
}

env::Cell parse_cell(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("a cell is a [x, y] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

int grid_side_for_states(double states) {
    const long n = std::lround(states);
    for (int side = 3; side <= 64; ++side) {
        const long cells = static_cast<long>(side) * side;
        if (cells * cells == n) return side;
    }
    throw ConfigError("no square grid has " + std::to_string(n) + " night-time pursuit states");
}

void validate(ExperimentConfig& c) {
    if (c.width < 3 || c.height < 3) throw ConfigError("grid must be at least 3x3");
    if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (c.agents.empty()) throw ConfigError("no agents configured");
    for (const auto& a : c.agents) {
        if (!kAgents.count(a)) throw ConfigError("unknown agent '" + a + "'");
        if (a == "assistant" && c.domain != DomainKind::Overcooked) {
            throw ConfigError("the assistant agent needs a fully observable domain (overcooked)");
        }
    }
    if (c.horizon == 0) throw ConfigError("horizon must be positive");
    if (c.trials == 0 || c.trials_per_task == 0) throw ConfigError("trial counts must be positive");
    if (c.workers == 0) throw ConfigError("workers must be positive");
    const std::size_t pool = pool_size(c);
    if (pool == 0) throw ConfigError("task pool is empty");
    if (c.num_tasks == 0) c.num_tasks = pool;
    if (c.num_tasks > pool) throw ConfigError("num_tasks exceeds the pool size");
    if (c.target == TargetMode::Each && c.num_tasks != pool) {
        throw ConfigError("target 'each' needs the library to be the whole pool");
    }
    if (c.posterior_floor && !(*c.posterior_floor >= 0.0 && *c.posterior_floor < 1.0)) {
        throw ConfigError("posterior_floor must lie in [0, 1)");
    }
    if (c.sweep != SweepAxis::None && c.sweep_values.empty()) throw ConfigError("sweep has no values");
    if ((c.sweep == SweepAxis::States || c.sweep == SweepAxis::Epsilon) && c.domain != DomainKind::NightPursuit) {
        throw ConfigError("the " + to_string(c.sweep) + " sweep applies to night_pursuit only");
    }
    for (double v : c.sweep_values) {
        switch (c.sweep) {
            case SweepAxis::States: grid_side_for_states(v); break;
            case SweepAxis::Epsilon:
                if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("epsilon sweep values must lie in [0, 1]");
                break;
            case SweepAxis::NumTasks:
                if (v < 1.0 || v > static_cast<double>(pool) || v != std::floor(v)) {
                    throw ConfigError("num_tasks sweep values must be integers in [1, pool size]");
                }
                break;
            case SweepAxis::None: break;
        }
    }
    if (c.domain == DomainKind::NightPursuit) {
        for (const auto& t : c.night_tasks) {
            env::GridSpec g{c.width, c.height, false, env::NoiseModel::constant(c.epsilon)};
            if (!g.contains(t[0]) || !g.contains(t[1]) || t[0] == t[1]) {
                throw ConfigError("prey cells must be distinct and inside the grid");
            }
        }
    }
    if (c.domain == DomainKind::Overcooked) {
        for (const auto& t : c.overcooked_tasks) {
            if (t.ad_hoc_role == env::OvercookedRole::Cook &&
                (t.teammate == env::OvercookedTeammate::Upper || t.teammate == env::OvercookedTeammate::Downer)) {
                throw ConfigError("upper and downer teammates need the ad hoc agent in the helper role");
            }
        }
    }
}

}  // namespace

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::NightPursuit: return "night_pursuit";
        case DomainKind::PursuitPO: return "pursuit_po";
        case DomainKind::Overcooked: return "overcooked";
    }
    return "?";
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::None: return "none";
        case SweepAxis::States: return "states";
        case SweepAxis::Epsilon: return "epsilon";
        case SweepAxis::NumTasks: return "num_tasks";
    }
    return "?";
}

std::size_t pool_size(const ExperimentConfig& c) {
    switch (c.domain) {
        case DomainKind::NightPursuit: return c.night_tasks.empty() ? c.pool_size : c.night_tasks.size();
        case DomainKind::PursuitPO: return c.pursuit_tasks.size();
        case DomainKind::Overcooked: return c.overcooked_tasks.size();
    }
    return 0;
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc,
               {"domain", "grid", "epsilon", "noise", "library", "target", "agents", "horizon", "trials_per_task",
                "trials", "seed", "workers", "traces", "atpo", "bopa", "sweep", "solver", "cache_dir"},
               "config");
    ExperimentConfig c;
    try {
        if (!doc.contains("domain")) throw ConfigError("config lacks 'domain'");
        c.domain = parse_domain(doc.at("domain").get<std::string>());
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            check_keys(g, {"width", "height"}, "grid");
            c.width = get(g, "width", c.width);
            c.height = get(g, "height", c.height);
        }
        c.epsilon = get(doc, "epsilon", c.epsilon);
        if (doc.contains("noise")) {
            const auto& n = doc.at("noise");
            check_keys(n, {"intercept", "slope"}, "noise");
            c.noise_intercept = get(n, "intercept", c.noise_intercept);
            c.noise_slope = get(n, "slope", c.noise_slope);
        }

        const json lib = doc.value("library", json::object());
        check_keys(lib, {"pool_size", "pool_seed", "num_tasks", "tasks"}, "library");
        c.pool_size = get(lib, "pool_size", c.pool_size);
        c.pool_seed = get(lib, "pool_seed", c.pool_seed);
        c.num_tasks = get(lib, "num_tasks", std::size_t{0});
        const json tasks = lib.value("tasks", json::array());
        if (!tasks.is_array()) throw ConfigError("library.tasks must be an array");
        switch (c.domain) {
            case DomainKind::NightPursuit:
                for (const auto& t : tasks) {
                    if (!t.is_array() || t.size() != 2) throw ConfigError("a night-time task is [[x, y], [x, y]]");
                    c.night_tasks.push_back({parse_cell(t[0]), parse_cell(t[1])});
                }
                break;
            case DomainKind::PursuitPO:
                for (const auto& t : tasks) c.pursuit_tasks.push_back(env::parse_pursuit_teammate(t.get<std::string>()));
                if (c.pursuit_tasks.empty()) {
                    c.pursuit_tasks = {env::PursuitTeammate::Greedy, env::PursuitTeammate::TeammateAware,
                                       env::PursuitTeammate::ProbabilisticDestinations};
                }
                break;
            case DomainKind::Overcooked:
                for (const auto& t : tasks) {
                    check_keys(t, {"role", "teammate"}, "overcooked task");
                    c.overcooked_tasks.push_back({env::parse_overcooked_role(t.at("role").get<std::string>()),
                                                  env::parse_overcooked_teammate(t.at("teammate").get<std::string>())});
                }
                if (c.overcooked_tasks.empty()) c.overcooked_tasks = env::overcooked_tasks();
                break;
        }

        const std::string target = get<std::string>(doc, "target", "each");
        if (target == "each") {
            c.target = TargetMode::Each;
        } else if (target == "random") {
            c.target = TargetMode::Random;
        } else {
            throw ConfigError("target must be 'each' or 'random'");
        }
        c.agents = get(doc, "agents", std::vector<std::string>{});
        c.horizon = get(doc, "horizon", std::size_t{c.domain == DomainKind::Overcooked ? 75u : 50u});
        c.trials_per_task = get(doc, "trials_per_task", c.trials_per_task);
        c.trials = get(doc, "trials", c.trials);
        c.seed = get(doc, "seed", c.seed);
        c.workers = get(doc, "workers", c.workers);
        c.write_traces = get(doc, "traces", c.write_traces);
        if (doc.contains("atpo")) {
            check_keys(doc.at("atpo"), {"posterior_floor"}, "atpo");
            if (doc.at("atpo").contains("posterior_floor") && !doc.at("atpo").at("posterior_floor").is_null()) {
                c.posterior_floor = doc.at("atpo").at("posterior_floor").get<double>();
            }
        }
        if (doc.contains("bopa")) {
            check_keys(doc.at("bopa"), {"mix"}, "bopa");
            c.bopa_mix = get(doc.at("bopa"), "mix", false);
        }
        if (doc.contains("sweep")) {
            const auto& s = doc.at("sweep");
            check_keys(s, {"axis", "values"}, "sweep");
            c.sweep = parse_axis(get<std::string>(s, "axis", "none"));
            c.sweep_values = get(s, "values", std::vector<double>{});
        }
        if (doc.contains("solver")) {
            const auto& s = doc.at("solver");
            check_keys(s, {"belief_count", "improvement_tol", "max_rounds", "vi_tol", "seed"}, "solver");
            c.solver.belief_count = get(s, "belief_count", c.solver.belief_count);
            c.solver.improvement_tol = get(s, "improvement_tol", c.solver.improvement_tol);
            c.solver.max_rounds = get(s, "max_rounds", c.solver.max_rounds);
            c.solver.vi_tol = get(s, "vi_tol", c.solver.vi_tol);
            c.solver.seed = get(s, "seed", c.solver.seed);
        }
        c.cache_dir = get<std::string>(doc, "cache_dir", c.cache_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ModelError& e) {
        throw ConfigError(e.what());
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["domain"] = to_string(c.domain);
    j["grid"] = {{"width", c.width}, {"height", c.height}};
    j["epsilon"] = c.epsilon;
    j["noise"] = {{"intercept", c.noise_intercept}, {"slope", c.noise_slope}};
    json tasks = json::array();
    for (const auto& t : c.night_tasks) tasks.push_back({{t[0].x, t[0].y}, {t[1].x, t[1].y}});
    for (const auto& t : c.pursuit_tasks) tasks.push_back(env::to_string(t));
    for (const auto& t : c.overcooked_tasks) {
        tasks.push_back({{"role", env::to_string(t.ad_hoc_role)}, {"teammate", env::to_string(t.teammate)}});
    }
    j["library"] = {{"pool_size", c.pool_size}, {"pool_seed", c.pool_seed}, {"num_tasks", c.num_tasks},
                    {"tasks", tasks}};
    j["target"] = c.target == TargetMode::Each ? "each" : "random";
    j["agents"] = c.agents;
    j["horizon"] = c.horizon;
    j["trials_per_task"] = c.trials_per_task;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["traces"] = c.write_traces;
    j["atpo"] = {{"posterior_floor", c.posterior_floor ? json(*c.posterior_floor) : json(nullptr)}};
    j["bopa"] = {{"mix", c.bopa_mix}};
    j["sweep"] = {{"axis", to_string(c.sweep)}, {"values", c.sweep_values}};
    j["solver"] = {{"belief_count", c.solver.belief_count},
                   {"improvement_tol", c.solver.improvement_tol},
                   {"max_rounds", c.solver.max_rounds},
                   {"vi_tol", c.solver.vi_tol},
                   {"seed", c.solver.seed}};
    j["cache_dir"] = c.cache_dir;
    return j;
}

ExperimentConfig at_sweep_point(const ExperimentConfig& config, double value) {
    ExperimentConfig c = config;
    switch (config.sweep) {
        case SweepAxis::States: {
            const int side = grid_side_for_states(value);
            c.width = side;
            c.height = side;
            break;
        }
        case SweepAxis::Epsilon: c.epsilon = value; break;
        case SweepAxis::NumTasks:
            c.num_tasks = static_cast<std::size_t>(std::lround(value));
            c.target = TargetMode::Random;
            break;
        case SweepAxis::None: break;
    }
    c.sweep = SweepAxis::None;
    c.sweep_values.clear();
    validate(c);
    return c;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace

std::string model_hash(const ExperimentConfig& c) {
    json j = to_json(c);
    json m;
    m["domain"] = j["domain"];
    m["solver"] = j["solver"];
    m["tasks"] = j["library"]["tasks"];
    m["format"] = 1;
    switch (c.domain) {
        case DomainKind::NightPursuit:
            m["grid"] = j["grid"];
            m["epsilon"] = j["epsilon"];
            if (c.night_tasks.empty()) {
                m["pool_size"] = c.pool_size;
                m["pool_seed"] = c.pool_seed;
            }
            break;
        case DomainKind::PursuitPO:
            m["grid"] = j["grid"];
            m["noise"] = j["noise"];
            break;
        case DomainKind::Overcooked: break;
    }
    return hex(fnv1a(m.dump()));
}

std::string config_hash(const ExperimentConfig& c) {
    json j = to_json(c);
    j.erase("workers");
    j.erase("cache_dir");
    return hex(fnv1a(j.dump()));
}

}  // namespace atpo::harness
