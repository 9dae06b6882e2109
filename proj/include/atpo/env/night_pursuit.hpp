#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "atpo/env/environment.hpp"
#include "atpo/env/grid.hpp"

namespace atpo::env {

struct NightPursuitTask {
    std::array<Cell, 2> preys{};
    GridSpec grid;
};

enum NeighborContent : std::size_t { kNothing = 0, kTeammate = 1, kPrey = 2 };

/// Two predators on a bounded grid must stand on two static preys at the
/// same time. The ad hoc agent's sensor reports the contents of its four
/// neighbors (up, down, left, right), each missed with probability epsilon.
class NightPursuit final : public Domain {
public:
    explicit NightPursuit(NightPursuitTask task);

    std::string label() const override;
    std::size_t num_states() const override { return cells_ * cells_; }
    std::size_t num_actions() const override { return 5; }
    std::size_t num_teammate_actions() const override { return 5; }
    std::size_t num_observations() const override { return 81; }
    double reward_bound() const override { return 100.0; }
    bool is_terminal(std::size_t x) const override;
    Belief initial_belief() const override;
    const TeammatePolicy& teammate_policy() const override { return teammate_; }

    std::vector<JointOutcome> joint_outcomes(std::size_t x, std::size_t action,
                                             std::size_t teammate_action) const override;
    std::vector<KernelEntry> observation_distribution(std::size_t next, std::size_t action) const override;
    std::pair<std::size_t, double> sample_joint(std::size_t x, std::size_t action, std::size_t teammate_action,
                                                Rng& rng) const override;
    std::size_t sample_observation(std::size_t next, std::size_t action, Rng& rng) const override;

    const NightPursuitTask& task() const { return task_; }
    std::size_t encode(Cell ad_hoc, Cell teammate) const;
    std::pair<Cell, Cell> decode(std::size_t x) const;

    /// Noise-free sensor reading (up, down, left, right) at state x.
    std::array<std::size_t, 4> true_reading(std::size_t x) const;
    static std::size_t encode_observation(const std::array<std::size_t, 4>& reading);
    static std::array<std::size_t, 4> decode_observation(std::size_t z);

    /// Teammate's deterministic move: toward the nearer prey (Manhattan,
    /// lower index on ties) along the larger axis.
    std::size_t teammate_move(Cell teammate) const;

private:
    double reward_on(std::size_t x, std::size_t next) const;

    NightPursuitTask task_;
    std::size_t cells_;
    TeammatePolicy teammate_;
};

BuiltTask build_night_pursuit(const NightPursuitTask& task);

/// `count` distinct unordered prey pairs drawn by a seeded shuffle of all
/// pairs on the grid.
std::vector<NightPursuitTask> night_pursuit_pool(const GridSpec& grid, std::size_t count, std::uint64_t seed);

}  // namespace atpo::env
