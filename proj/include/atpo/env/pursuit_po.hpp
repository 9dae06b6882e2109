#pragma once

#include <string>
#include <utility>
#include <vector>

#include "atpo/env/environment.hpp"
#include "atpo/env/grid.hpp"

namespace atpo::env {

enum class PursuitTeammate { Greedy, TeammateAware, ProbabilisticDestinations };

std::string to_string(PursuitTeammate type);
PursuitTeammate parse_pursuit_teammate(const std::string& name);

struct PursuitPOTask {
    PursuitTeammate teammate = PursuitTeammate::Greedy;
    GridSpec grid{5, 5, true, NoiseModel::decay()};
};

/// Two predators cornering one moving prey on a torus, seen from the ad hoc
/// agent. The agent sits at the origin; a state is the pair of cells of
/// teammate and prey relative to it, all three distinct.
class PursuitPO final : public Domain {
public:
    explicit PursuitPO(PursuitPOTask task);

    std::string label() const override { return to_string(task_.teammate); }
    std::size_t num_states() const override { return pairs_.size(); }
    std::size_t num_actions() const override { return 4; }
    std::size_t num_teammate_actions() const override { return 5; }
    std::size_t num_observations() const override { return cells_ * cells_; }
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

    const PursuitPOTask& task() const { return task_; }
    const GridSpec& grid() const { return task_.grid; }

    /// Cells relative to the ad hoc agent (which is at cell {0,0}).
    std::size_t encode(Cell teammate, Cell prey) const;
    std::pair<Cell, Cell> decode(std::size_t x) const;
    bool cornered(Cell teammate, Cell prey) const;

    std::size_t encode_observation(Cell teammate, Cell prey) const;
    std::pair<Cell, Cell> decode_observation(std::size_t z) const;
    /// Mis-observation probability of an entity at cell c.
    double miss_probability(Cell c) const;

    /// Distribution over the teammate's five actions at state x.
    std::vector<double> teammate_distribution(std::size_t x) const;

private:
    struct AfterMoves {
        Cell teammate;
        Cell prey;
    };
    AfterMoves move_predators(Cell t, Cell p, std::size_t action, std::size_t teammate_action) const;
    std::vector<Cell> prey_moves(Cell t, Cell p) const;
    double reward_into(std::size_t next) const { return is_terminal(next) ? 100.0 : -1.0; }

    PursuitPOTask task_;
    std::size_t cells_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    std::vector<std::size_t> index_;  // cell pair -> state, or npos
    TeammatePolicy teammate_;
};

BuiltTask build_pursuit_po(const PursuitPOTask& task);

}  // namespace atpo::env
