#include "atpo/env/night_pursuit.hpp"

#include <algorithm>

namespace atpo::env {

namespace {

TeammatePolicy make_teammate(const NightPursuit& domain, const GridSpec& grid) {
    const std::size_t cells = grid.num_cells();
    std::vector<std::size_t> actions(cells * cells);
    for (std::size_t x = 0; x < actions.size(); ++x) {
        actions[x] = domain.teammate_move(domain.decode(x).second);
    }
    return StatePolicy::deterministic(actions, 5);
}

}  // namespace

NightPursuit::NightPursuit(NightPursuitTask task)
    : task_(std::move(task)),
      cells_(task_.grid.num_cells()),
      teammate_(StatePolicy::uniform(1, 5)) {
    task_.grid.toroidal = false;
    task_.grid.validate();
    if (task_.grid.noise.distance_decay) throw ModelError("night-time pursuit uses a constant epsilon");
    for (const Cell& p : task_.preys) {
        if (!task_.grid.contains(p)) throw ModelError("prey outside the grid");
    }
    if (task_.preys[0] == task_.preys[1]) throw ModelError("prey cells must be distinct");
    teammate_ = make_teammate(*this, task_.grid);
}

std::string NightPursuit::label() const {
    const auto& p = task_.preys;
    return "prey_x" + std::to_string(p[0].x) + "y" + std::to_string(p[0].y) + "_x" + std::to_string(p[1].x) + "y" +
           std::to_string(p[1].y);
}

std::size_t NightPursuit::encode(Cell ad_hoc, Cell teammate) const {
    return task_.grid.index(ad_hoc) * cells_ + task_.grid.index(teammate);
}

std::pair<Cell, Cell> NightPursuit::decode(std::size_t x) const {
    return {task_.grid.cell(x / cells_), task_.grid.cell(x % cells_)};
}

bool NightPursuit::is_terminal(std::size_t x) const {
    const auto [a, t] = decode(x);
    const auto& p = task_.preys;
    return (a == p[0] && t == p[1]) || (a == p[1] && t == p[0]);
}

Belief NightPursuit::initial_belief() const {
    std::vector<std::size_t> support;
    for (std::size_t x = 0; x < num_states(); ++x) {
        const auto [a, t] = decode(x);
        bool on_prey = false;
        for (const Cell& p : task_.preys) on_prey = on_prey || a == p || t == p;
        if (!on_prey) support.push_back(x);
    }
    return Belief::uniform_over(num_states(), support);
}

std::size_t NightPursuit::teammate_move(Cell teammate) const {
    const auto& grid = task_.grid;
    const auto& p = task_.preys;
    const Cell target = grid.manhattan(teammate, p[1]) < grid.manhattan(teammate, p[0]) ? p[1] : p[0];
    return greedy_move(grid, teammate, target);
}

double NightPursuit::reward_on(std::size_t x, std::size_t next) const {
    if (is_terminal(x)) return 0.0;
    return is_terminal(next) ? 100.0 : -1.0;
}

std::vector<JointOutcome> NightPursuit::joint_outcomes(std::size_t x, std::size_t action,
                                                       std::size_t teammate_action) const {
    if (is_terminal(x)) return {{1.0, x, 0.0}};
    const auto& grid = task_.grid;
    const auto [a, t] = decode(x);
    const Cell t2 = grid.step(t, teammate_action).value_or(t);
    const Cell moved = grid.step(a, action).value_or(a);
    const double eps = grid.noise.at();
    std::vector<JointOutcome> out;
    if (moved == a || eps == 0.0) {
        const std::size_t y = encode(moved, t2);
        out.push_back({1.0, y, reward_on(x, y)});
        return out;
    }
    const std::size_t y_ok = encode(moved, t2);
    const std::size_t y_fail = encode(a, t2);
    out.push_back({1.0 - eps, y_ok, reward_on(x, y_ok)});
    out.push_back({eps, y_fail, reward_on(x, y_fail)});
    return out;
}

std::pair<std::size_t, double> NightPursuit::sample_joint(std::size_t x, std::size_t action,
                                                          std::size_t teammate_action, Rng& rng) const {
    if (is_terminal(x)) return {x, 0.0};
    const auto& grid = task_.grid;
    auto [a, t] = decode(x);
    if (auto n = grid.step(t, teammate_action)) t = *n;
    if (action != kStay && rng.uniform() < 1.0 - grid.noise.at()) {
        if (auto n = grid.step(a, action)) a = *n;
    }
    const std::size_t y = encode(a, t);
    return {y, reward_on(x, y)};
}

std::array<std::size_t, 4> NightPursuit::true_reading(std::size_t x) const {
    const auto [a, t] = decode(x);
    std::array<std::size_t, 4> reading{};
    for (std::size_t m = 0; m < 4; ++m) {
        const auto n = task_.grid.step(a, m);
        if (!n) continue;
        if (*n == t) {
            reading[m] = kTeammate;
        } else if (*n == task_.preys[0] || *n == task_.preys[1]) {
            reading[m] = kPrey;
        }
    }
    return reading;
}

std::size_t NightPursuit::encode_observation(const std::array<std::size_t, 4>& r) {
    return ((r[0] * 3 + r[1]) * 3 + r[2]) * 3 + r[3];
}

std::array<std::size_t, 4> NightPursuit::decode_observation(std::size_t z) {
    std::array<std::size_t, 4> r{};
    for (int i = 3; i >= 0; --i) {
        r[static_cast<std::size_t>(i)] = z % 3;
        z /= 3;
    }
    return r;
}

std::vector<KernelEntry> NightPursuit::observation_distribution(std::size_t next, std::size_t /*action*/) const {
    const auto truth = true_reading(next);
    const double eps = task_.grid.noise.at();
    std::vector<KernelEntry> out;
    for (unsigned mask = 0; mask < 16; ++mask) {
        auto reading = truth;
        double p = 1.0;
        bool valid = true;
        for (std::size_t m = 0; m < 4; ++m) {
            const bool missed = (mask >> m) & 1U;
            if (truth[m] == kNothing) {
                if (missed) valid = false;
                continue;
            }
            if (missed) {
                reading[m] = kNothing;
                p *= eps;
            } else {
                p *= 1.0 - eps;
            }
        }
        if (valid && p > 0.0) out.push_back({encode_observation(reading), p});
    }
    return out;
}

std::size_t NightPursuit::sample_observation(std::size_t next, std::size_t /*action*/, Rng& rng) const {
    auto reading = true_reading(next);
    const double eps = task_.grid.noise.at();
    for (auto& r : reading) {
        if (r != kNothing && rng.uniform() < eps) r = kNothing;
    }
    return encode_observation(reading);
}

BuiltTask build_night_pursuit(const NightPursuitTask& task) {
    auto sim = std::make_shared<NightPursuit>(task);
    return {sim->build_pomdp(), sim};
}

std::vector<NightPursuitTask> night_pursuit_pool(const GridSpec& grid, std::size_t count, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const std::size_t n = grid.num_cells();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    if (count > pairs.size()) throw ModelError("grid has fewer than " + std::to_string(count) + " prey pairs");
    Rng rng(seed);
    for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[rng.below(i)]);
    std::vector<NightPursuitTask> out;
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back({{grid.cell(pairs[k].first), grid.cell(pairs[k].second)}, grid});
    }
    return out;
}

}  // namespace atpo::env
