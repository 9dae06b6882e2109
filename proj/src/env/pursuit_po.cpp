#include "atpo/env/pursuit_po.hpp"

#include <algorithm>
#include <limits>

namespace atpo::env {

namespace {

constexpr Cell kOrigin{0, 0};
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

bool adjacent(const GridSpec& grid, Cell a, Cell b) { return grid.manhattan(a, b) == 1; }

Cell shifted(const GridSpec& grid, Cell c, std::size_t move) { return *grid.step(c, move); }

}  // namespace

std::string to_string(PursuitTeammate type) {
    switch (type) {
        case PursuitTeammate::Greedy: return "greedy";
        case PursuitTeammate::TeammateAware: return "teammate_aware";
        case PursuitTeammate::ProbabilisticDestinations: return "probabilistic_destinations";
    }
    throw ModelError("unknown pursuit teammate type");
}

PursuitTeammate parse_pursuit_teammate(const std::string& name) {
    if (name == "greedy") return PursuitTeammate::Greedy;
    if (name == "teammate_aware") return PursuitTeammate::TeammateAware;
    if (name == "probabilistic_destinations") return PursuitTeammate::ProbabilisticDestinations;
    throw ModelError("unknown pursuit teammate type '" + name + "'");
}

PursuitPO::PursuitPO(PursuitPOTask task)
    : task_(std::move(task)), cells_(task_.grid.num_cells()), teammate_(StatePolicy::uniform(1, 5)) {
    task_.grid.toroidal = true;
    task_.grid.validate();
    if (static_cast<int>(task_.teammate) < 0 || static_cast<int>(task_.teammate) > 2) {
        throw ModelError("unknown pursuit teammate type");
    }
    index_.assign(cells_ * cells_, kNone);
    for (std::size_t t = 1; t < cells_; ++t) {
        for (std::size_t p = 1; p < cells_; ++p) {
            if (t == p) continue;
            index_[t * cells_ + p] = pairs_.size();
            pairs_.emplace_back(t, p);
        }
    }
    std::vector<double> probs;
    probs.reserve(pairs_.size() * 5);
    for (std::size_t x = 0; x < pairs_.size(); ++x) {
        const auto row = teammate_distribution(x);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    teammate_ = StatePolicy(pairs_.size(), 5, std::move(probs));
}

std::size_t PursuitPO::encode(Cell teammate, Cell prey) const {
    const std::size_t x = index_.at(grid().index(grid().wrap(teammate)) * cells_ + grid().index(grid().wrap(prey)));
    if (x == kNone) throw ModelError("entities must occupy distinct cells away from the origin");
    return x;
}

std::pair<Cell, Cell> PursuitPO::decode(std::size_t x) const {
    const auto [t, p] = pairs_.at(x);
    return {grid().cell(t), grid().cell(p)};
}

bool PursuitPO::cornered(Cell teammate, Cell prey) const {
    return adjacent(grid(), kOrigin, prey) && adjacent(grid(), teammate, prey);
}

bool PursuitPO::is_terminal(std::size_t x) const {
    const auto [t, p] = decode(x);
    return cornered(t, p);
}

Belief PursuitPO::initial_belief() const {
    std::vector<std::size_t> support;
    for (std::size_t x = 0; x < num_states(); ++x) {
        if (!is_terminal(x)) support.push_back(x);
    }
    return Belief::uniform_over(num_states(), support);
}

std::vector<double> PursuitPO::teammate_distribution(std::size_t x) const {
    const auto& g = grid();
    const auto [t, p] = decode(x);
    std::vector<double> dist(5, 0.0);
    if (adjacent(g, t, p)) {
        dist[kStay] = 1.0;
        return dist;
    }
    switch (task_.teammate) {
        case PursuitTeammate::Greedy: {
            dist[greedy_move(g, t, p)] = 1.0;
            break;
        }
        case PursuitTeammate::TeammateAware: {
            const std::array<Cell, 1> blocked{kOrigin};
            std::size_t best = kStay;
            int best_len = std::numeric_limits<int>::max();
            for (std::size_t m = 0; m < 4; ++m) {
                const Cell n = shifted(g, t, m);
                if (n == kOrigin) continue;
                const auto len = astar_distance(g, n, p, blocked);
                if (len && *len < best_len) {
                    best_len = *len;
                    best = m;
                }
            }
            dist[best] = 1.0;
            break;
        }
        case PursuitTeammate::ProbabilisticDestinations: {
            std::array<Cell, 4> capture{};
            for (std::size_t m = 0; m < 4; ++m) capture[m] = shifted(g, p, m);
            std::size_t own = 0;
            for (std::size_t m = 1; m < 4; ++m) {
                if (g.manhattan(kOrigin, capture[m]) < g.manhattan(kOrigin, capture[own])) own = m;
            }
            // Distances walk around the prey, so the opposite side is farthest.
            const std::array<Cell, 1> prey_cell{p};
            int far = -1;
            std::vector<Cell> destinations;
            for (std::size_t m = 0; m < 4; ++m) {
                if (m == own) continue;
                const int d = astar_distance(g, capture[own], capture[m], prey_cell).value_or(0);
                if (d > far) {
                    far = d;
                    destinations.clear();
                }
                if (d == far) destinations.push_back(capture[m]);
            }
            const double w = 1.0 / static_cast<double>(destinations.size());
            for (const Cell& dest : destinations) {
                const Cell off = g.offset(t, dest);
                std::size_t chosen = kStay;
                if (off.x != 0 || off.y != 0) {
                    const std::size_t horizontal = off.x > 0 ? kRight : kLeft;
                    const std::size_t vertical = off.y > 0 ? kDown : kUp;
                    const bool prefer_h = std::abs(off.x) >= std::abs(off.y);
                    std::vector<std::size_t> options;
                    if (prefer_h) {
                        options.push_back(horizontal);
                        if (off.y != 0) options.push_back(vertical);
                    } else {
                        options.push_back(vertical);
                        if (off.x != 0) options.push_back(horizontal);
                    }
                    for (std::size_t m : options) {
                        const Cell n = shifted(g, t, m);
                        if (n != kOrigin && n != p) {
                            chosen = m;
                            break;
                        }
                    }
                }
                dist[chosen] += w;
            }
            break;
        }
    }
    return dist;
}

PursuitPO::AfterMoves PursuitPO::move_predators(Cell t, Cell p, std::size_t action,
                                                std::size_t teammate_action) const {
    const auto& g = grid();
    const Cell target = shifted(g, kOrigin, action);
    if (target != t && target != p) {
        // Re-centre on the agent's new cell.
        const Cell d = kMoveDelta[action];
        t = g.wrap({t.x - d.x, t.y - d.y});
        p = g.wrap({p.x - d.x, p.y - d.y});
    }
    if (teammate_action != kStay) {
        const Cell n = shifted(g, t, teammate_action);
        if (n != kOrigin && n != p) t = n;
    }
    return {t, p};
}

std::vector<Cell> PursuitPO::prey_moves(Cell t, Cell p) const {
    std::vector<Cell> free;
    for (std::size_t m = 0; m < 4; ++m) {
        const Cell n = shifted(grid(), p, m);
        if (n != kOrigin && n != t) free.push_back(n);
    }
    if (free.empty()) free.push_back(p);
    return free;
}

std::vector<JointOutcome> PursuitPO::joint_outcomes(std::size_t x, std::size_t action,
                                                    std::size_t teammate_action) const {
    if (is_terminal(x)) return {{1.0, x, 0.0}};
    const auto [t0, p0] = decode(x);
    const auto [t, p] = move_predators(t0, p0, action, teammate_action);
    if (cornered(t, p)) {
        return {{1.0, encode(t, p), 100.0}};
    }
    const auto moves = prey_moves(t, p);
    const double w = 1.0 / static_cast<double>(moves.size());
    std::vector<JointOutcome> out;
    for (const Cell& n : moves) {
        const std::size_t y = encode(t, n);
        out.push_back({w, y, reward_into(y)});
    }
    return out;
}

std::pair<std::size_t, double> PursuitPO::sample_joint(std::size_t x, std::size_t action,
                                                       std::size_t teammate_action, Rng& rng) const {
    if (is_terminal(x)) return {x, 0.0};
    const auto [t0, p0] = decode(x);
    auto [t, p] = move_predators(t0, p0, action, teammate_action);
    if (!cornered(t, p)) {
        const auto moves = prey_moves(t, p);
        p = moves[rng.below(moves.size())];
    }
    const std::size_t y = encode(t, p);
    return {y, reward_into(y)};
}

double PursuitPO::miss_probability(Cell c) const { return grid().noise.at(grid().chebyshev(kOrigin, c)); }

std::size_t PursuitPO::encode_observation(Cell teammate, Cell prey) const {
    return grid().index(grid().wrap(teammate)) * cells_ + grid().index(grid().wrap(prey));
}

std::pair<Cell, Cell> PursuitPO::decode_observation(std::size_t z) const {
    return {grid().cell(z / cells_), grid().cell(z % cells_)};
}

std::vector<KernelEntry> PursuitPO::observation_distribution(std::size_t next, std::size_t /*action*/) const {
    const auto [t, p] = decode(next);
    auto reports = [&](Cell c) {
        std::vector<std::pair<Cell, double>> r;
        const double eps = miss_probability(c);
        if (eps < 1.0) r.emplace_back(c, 1.0 - eps);
        if (eps > 0.0) {
            for (std::size_t m = 0; m < 4; ++m) r.emplace_back(shifted(grid(), c, m), eps / 4.0);
        }
        return r;
    };
    std::vector<KernelEntry> out;
    for (const auto& [ct, pt] : reports(t)) {
        for (const auto& [cp, pp] : reports(p)) out.push_back({encode_observation(ct, cp), pt * pp});
    }
    return out;
}

std::size_t PursuitPO::sample_observation(std::size_t next, std::size_t /*action*/, Rng& rng) const {
    auto [t, p] = decode(next);
    for (Cell* c : {&t, &p}) {
        if (rng.uniform() < miss_probability(*c)) *c = shifted(grid(), *c, rng.below(4));
    }
    return encode_observation(t, p);
}

BuiltTask build_pursuit_po(const PursuitPOTask& task) {
    auto sim = std::make_shared<PursuitPO>(task);
    return {sim->build_pomdp(), sim};
}

}  // namespace atpo::env
