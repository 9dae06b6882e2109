#include "atpo/harness/library.hpp"

#include <chrono>
#include <ostream>

#include "atpo/serialization.hpp"

namespace atpo::harness {

namespace fs = std::filesystem;

std::vector<env::DomainPtr> make_domains(const ExperimentConfig& c) {
    std::vector<env::DomainPtr> out;
    switch (c.domain) {
        case DomainKind::NightPursuit: {
            const env::GridSpec grid{c.width, c.height, false, env::NoiseModel::constant(c.epsilon)};
            std::vector<env::NightPursuitTask> tasks;
            if (c.night_tasks.empty()) {
                tasks = env::night_pursuit_pool(grid, c.pool_size, c.pool_seed);
            } else {
                for (const auto& preys : c.night_tasks) tasks.push_back({preys, grid});
            }
            for (const auto& t : tasks) out.push_back(std::make_shared<env::NightPursuit>(t));
            break;
        }
        case DomainKind::PursuitPO: {
            const env::GridSpec grid{c.width, c.height, true,
                                     env::NoiseModel::decay(c.noise_intercept, c.noise_slope)};
            for (auto type : c.pursuit_tasks) out.push_back(std::make_shared<env::PursuitPO>(env::PursuitPOTask{type, grid}));
            break;
        }
        case DomainKind::Overcooked:
            for (const auto& t : c.overcooked_tasks) out.push_back(std::make_shared<env::Overcooked>(t));
            break;
    }
    return out;
}

std::vector<Belief> perseus_beliefs(const TabularPOMDP& pomdp, const SolverConfig& solver) {
    if (pomdp.has_identity_observations()) return reachable_point_beliefs(pomdp);
    const std::size_t n = solver.belief_count ? solver.belief_count : default_belief_count(pomdp.num_states());
    return sample_belief_set(pomdp, n, solver.seed);
}

namespace {

using Clock = std::chrono::steady_clock;

std::optional<std::pair<TabularPOMDP, AlphaVectorPolicy>> try_load(const fs::path& model, const fs::path& policy,
                                                                   const TabularPOMDP& built) {
    if (!fs::exists(model) || !fs::exists(policy)) return std::nullopt;
    try {
        auto pomdp = load_pomdp(model);
        auto alpha = load_policy(policy);
        if (!(pomdp == built) || alpha.num_states() != built.num_states()) return std::nullopt;
        return std::make_pair(std::move(pomdp), std::move(alpha));
    } catch (const FormatError&) {
        return std::nullopt;
    }
}

}  // namespace

SolvedLibrary solve_library(const ExperimentConfig& config, const fs::path& cache_root, std::ostream* log) {
    const std::string hash = model_hash(config);
    const fs::path dir = cache_root / hash;
    fs::create_directories(dir);

    std::vector<SolvedTask> solved;
    std::vector<Task> tasks;
    for (const auto& domain : make_domains(config)) {
        const auto start = Clock::now();
        const std::string label = domain->label();
        TabularPOMDP built = domain->build_pomdp();
        const fs::path model_path = dir / (label + ".model");
        const fs::path policy_path = dir / (label + ".policy");

        bool converged = true;
        bool cached = false;
        std::optional<AlphaVectorPolicy> policy;
        if (auto hit = try_load(model_path, policy_path, built)) {
            policy = std::move(hit->second);
            cached = true;
        } else {
            const auto beliefs = perseus_beliefs(built, config.solver);
            PerseusOptions opts;
            opts.improvement_tol = config.solver.improvement_tol;
            opts.max_rounds = config.solver.max_rounds;
            opts.seed = config.solver.seed;
            auto result = perseus_solve(built, beliefs, opts);
            converged = result.converged;
            policy = std::move(result.policy);
            save_pomdp(model_path, built);
            save_policy(policy_path, *policy);
        }
        auto values = value_iteration(built.base(), config.solver.vi_tol);
        SolvedTask task{label,
                        domain,
                        values,
                        greedy_policy(values, TieBreak::Uniform),
                        greedy_policy(values, TieBreak::LowestIndex),
                        converged,
                        cached,
                        std::chrono::duration<double>(Clock::now() - start).count()};
        if (log) {
            *log << "  " << label << ": " << built.num_states() << " states, " << policy->size() << " vectors"
                 << (cached ? " (cached)" : "") << (converged ? "" : " (perseus hit max_rounds)") << '\n';
        }
        tasks.push_back(Task{std::move(built), std::move(*policy), label});
        solved.push_back(std::move(task));
    }
    return SolvedLibrary{hash, std::move(solved), TaskLibrary(std::move(tasks))};
}

TaskLibrary sub_library(const SolvedLibrary& solved, const std::vector<std::size_t>& indices) {
    std::vector<Task> tasks;
    for (std::size_t i : indices) tasks.push_back(solved.pool[i]);
    return TaskLibrary(std::move(tasks));
}

}  // namespace atpo::harness
