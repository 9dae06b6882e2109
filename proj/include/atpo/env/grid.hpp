#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace atpo::env {

struct Cell {
    int x = 0;  // column
    int y = 0;  // row, 0 at the top

    bool operator==(const Cell&) const = default;
};

enum Move : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

inline constexpr std::array<Cell, 5> kMoveDelta{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}, {0, 0}}};

std::string move_name(std::size_t move);

/// Failure probability, either constant or decaying linearly with distance
/// and clamped to [0, 1].
struct NoiseModel {
    double epsilon = 0.0;
    bool distance_decay = false;
    double intercept = 1.0;
    double slope = 0.15;

    static NoiseModel constant(double eps) { return {eps, false, 1.0, 0.15}; }
    static NoiseModel decay(double intercept = 1.0, double slope = 0.15) { return {0.0, true, intercept, slope}; }

    double at(int distance = 0) const;
    void validate() const;
};

struct GridSpec {
    int width = 5;
    int height = 5;
    bool toroidal = false;
    NoiseModel noise;

    std::size_t num_cells() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width + c.x; }
    Cell cell(std::size_t i) const { return {static_cast<int>(i % width), static_cast<int>(i / width)}; }

    /// Wraps on a torus; on a bounded grid returns nullopt past a wall.
    std::optional<Cell> step(Cell c, std::size_t move) const;
    Cell wrap(Cell c) const;
    /// Signed per-axis displacement from `from` to `to`, taking the short
    /// way round on a torus.
    Cell offset(Cell from, Cell to) const;
    int manhattan(Cell a, Cell b) const;
    int chebyshev(Cell a, Cell b) const;

    void validate() const;
};

/// Shortest path length from `start` to `goal` moving orthogonally and
/// avoiding `blocked` cells; nullopt when the goal is unreachable.
std::optional<int> astar_distance(const GridSpec& grid, Cell start, Cell goal, std::span<const Cell> blocked);

/// Greedy move toward `to`: along the axis of the larger absolute offset,
/// horizontal on ties; Stay when already there.
std::size_t greedy_move(const GridSpec& grid, Cell from, Cell to);

}  // namespace atpo::env
