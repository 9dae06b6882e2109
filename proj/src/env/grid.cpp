#include "atpo/env/grid.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <tuple>
#include <vector>

#include "atpo/mdp.hpp"

namespace atpo::env {

std::string move_name(std::size_t move) {
    static const std::array<const char*, 5> names{"Up", "Down", "Left", "Right", "Stay"};
    return move < names.size() ? names[move] : "?";
}

double NoiseModel::at(int distance) const {
    if (!distance_decay) return epsilon;
    return std::clamp(intercept - slope * static_cast<double>(distance), 0.0, 1.0);
}

void NoiseModel::validate() const {
    if (!distance_decay && !(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ModelError("epsilon must lie in [0, 1]");
    }
    if (distance_decay && !(slope >= 0.0)) throw ModelError("noise decay slope must be non-negative");
}

void GridSpec::validate() const {
    if (width < 3 || height < 3) throw ModelError("grid must be at least 3x3");
    noise.validate();
}

Cell GridSpec::wrap(Cell c) const { return {((c.x % width) + width) % width, ((c.y % height) + height) % height}; }

std::optional<Cell> GridSpec::step(Cell c, std::size_t move) const {
    const Cell d = kMoveDelta.at(move);
    const Cell n{c.x + d.x, c.y + d.y};
    if (toroidal) return wrap(n);
    if (!contains(n)) return std::nullopt;
    return n;
}

namespace {

int signed_wrap(int d, int size) {
    int s = ((d % size) + size) % size;
    if (s > size / 2) s -= size;
    return s;
}

}  // namespace

Cell GridSpec::offset(Cell from, Cell to) const {
    Cell d{to.x - from.x, to.y - from.y};
    if (toroidal) d = {signed_wrap(d.x, width), signed_wrap(d.y, height)};
    return d;
}

int GridSpec::manhattan(Cell a, Cell b) const {
    const Cell d = offset(a, b);
    return std::abs(d.x) + std::abs(d.y);
}

int GridSpec::chebyshev(Cell a, Cell b) const {
    const Cell d = offset(a, b);
    return std::max(std::abs(d.x), std::abs(d.y));
}

std::optional<int> astar_distance(const GridSpec& grid, Cell start, Cell goal, std::span<const Cell> blocked) {
    if (start == goal) return 0;
    const std::size_t n = grid.num_cells();
    std::vector<char> wall(n, 0);
    for (const Cell& b : blocked) wall[grid.index(b)] = 1;
    std::vector<int> g(n, -1);
    using Item = std::tuple<int, int, std::size_t>;  // f, g, cell
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g[grid.index(start)] = 0;
    open.emplace(grid.manhattan(start, goal), 0, grid.index(start));
    while (!open.empty()) {
        const auto [f, cost, idx] = open.top();
        open.pop();
        if (cost > g[idx]) continue;
        const Cell c = grid.cell(idx);
        if (c == goal) return cost;
        for (std::size_t m = 0; m < 4; ++m) {
            const auto next = grid.step(c, m);
            if (!next) continue;
            const std::size_t ni = grid.index(*next);
            if (wall[ni]) continue;
            if (g[ni] >= 0 && g[ni] <= cost + 1) continue;
            g[ni] = cost + 1;
            open.emplace(cost + 1 + grid.manhattan(*next, goal), cost + 1, ni);
        }
    }
    return std::nullopt;
}

std::size_t greedy_move(const GridSpec& grid, Cell from, Cell to) {
    const Cell d = grid.offset(from, to);
    if (d.x == 0 && d.y == 0) return kStay;
    if (std::abs(d.x) >= std::abs(d.y)) return d.x > 0 ? kRight : kLeft;
    return d.y > 0 ? kDown : kUp;
}

}  // namespace atpo::env
