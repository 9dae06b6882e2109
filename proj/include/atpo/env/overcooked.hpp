#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "atpo/env/environment.hpp"

namespace atpo::env {

enum class OvercookedRole { Helper, Cook };
enum class OvercookedTeammate { Greedy, Dummy, Upper, Downer };

std::string to_string(OvercookedRole role);
std::string to_string(OvercookedTeammate type);
OvercookedRole parse_overcooked_role(const std::string& name);
OvercookedTeammate parse_overcooked_teammate(const std::string& name);

struct OvercookedTask {
    OvercookedRole ad_hoc_role = OvercookedRole::Helper;
    OvercookedTeammate teammate = OvercookedTeammate::Greedy;
};

/// The six valid (role, teammate) combinations.
std::vector<OvercookedTask> overcooked_tasks();

enum OvercookedAction : std::size_t { kOcUp = 0, kOcDown = 1, kOcNoop = 2, kOcAct = 3 };
enum Row : std::size_t { kTop = 0, kBottom = 1 };
enum Held : std::size_t { kEmpty = 0, kOnion = 1, kPlate = 2, kSoup = 3 };
enum Pan : std::size_t { kPanEmpty = 0, kPanOne = 1, kPanTwo = 2, kPanCooked = 3 };

/// Structured kitchen state. Balconies hold kEmpty, kOnion or kPlate.
struct Kitchen {
    std::size_t helper_row = kTop;
    std::size_t cook_row = kTop;
    std::size_t helper_holds = kEmpty;
    std::size_t cook_holds = kEmpty;
    std::size_t top_balcony = kEmpty;
    std::size_t bottom_balcony = kEmpty;
    std::size_t pan = kPanEmpty;

    bool operator==(const Kitchen&) const = default;
    std::size_t& balcony(std::size_t row) { return row == kTop ? top_balcony : bottom_balcony; }
    std::size_t balcony(std::size_t row) const { return row == kTop ? top_balcony : bottom_balcony; }
};

/// Two-cell kitchen split by a counter with two balconies. The helper
/// fetches onions (top dispenser) and plates (bottom dispenser) and drops
/// them on the balconies; the cook fills the pan with three onions, plates
/// the soup and delivers it. Fully observable.
class Overcooked final : public Domain {
public:
    static constexpr std::size_t kNumStates = 2 * 2 * 4 * 4 * 3 * 3 * 4;

    explicit Overcooked(OvercookedTask task);

    std::string label() const override;
    std::size_t num_states() const override { return kNumStates; }
    std::size_t num_actions() const override { return 4; }
    std::size_t num_teammate_actions() const override { return 4; }
    std::size_t num_observations() const override { return kNumStates; }
    std::size_t ad_hoc_index() const override { return task_.ad_hoc_role == OvercookedRole::Helper ? 0 : 1; }
    double reward_bound() const override { return 15.0; }
    bool is_terminal(std::size_t) const override { return false; }
    Belief initial_belief() const override;
    const TeammatePolicy& teammate_policy() const override { return teammate_; }

    std::vector<JointOutcome> joint_outcomes(std::size_t x, std::size_t action,
                                             std::size_t teammate_action) const override;
    std::vector<KernelEntry> observation_distribution(std::size_t next, std::size_t action) const override;
    std::pair<std::size_t, double> sample_joint(std::size_t x, std::size_t action, std::size_t teammate_action,
                                                Rng& rng) const override;
    std::size_t sample_observation(std::size_t next, std::size_t action, Rng& rng) const override;

    const OvercookedTask& task() const { return task_; }

    static std::size_t encode(const Kitchen& k);
    static Kitchen decode(std::size_t x);

    /// Applies the helper's action, then the cook's. Returns the reward.
    static double apply(Kitchen& k, std::size_t helper_action, std::size_t cook_action);

    static std::size_t greedy_helper_action(const Kitchen& k);
    /// `pinned` restricts the cook to one row (Upper/Downer); -1 for none.
    static std::size_t greedy_cook_action(const Kitchen& k, int pinned = -1);

    /// Teammate action at x, given the ad hoc agent's simultaneous action.
    std::size_t teammate_action(std::size_t x, std::size_t ad_hoc_action) const;

private:
    std::pair<std::size_t, std::size_t> order(std::size_t ad_hoc, std::size_t teammate) const;

    OvercookedTask task_;
    TeammatePolicy teammate_;
};

BuiltTask build_overcooked(const OvercookedTask& task);

}  // namespace atpo::env
