#include "atpo/env/overcooked.hpp"

namespace atpo::env {

std::string to_string(OvercookedRole role) { return role == OvercookedRole::Helper ? "helper" : "cook"; }

std::string to_string(OvercookedTeammate type) {
    switch (type) {
        case OvercookedTeammate::Greedy: return "greedy";
        case OvercookedTeammate::Dummy: return "dummy";
        case OvercookedTeammate::Upper: return "upper";
        case OvercookedTeammate::Downer: return "downer";
    }
    throw ModelError("unknown overcooked teammate type");
}

OvercookedRole parse_overcooked_role(const std::string& name) {
    if (name == "helper") return OvercookedRole::Helper;
    if (name == "cook") return OvercookedRole::Cook;
    throw ModelError("unknown overcooked role '" + name + "'");
}

OvercookedTeammate parse_overcooked_teammate(const std::string& name) {
    if (name == "greedy") return OvercookedTeammate::Greedy;
    if (name == "dummy") return OvercookedTeammate::Dummy;
    if (name == "upper") return OvercookedTeammate::Upper;
    if (name == "downer") return OvercookedTeammate::Downer;
    throw ModelError("unknown overcooked teammate type '" + name + "'");
}

std::vector<OvercookedTask> overcooked_tasks() {
    using R = OvercookedRole;
    using T = OvercookedTeammate;
    return {{R::Helper, T::Greedy}, {R::Helper, T::Dummy}, {R::Helper, T::Upper},
            {R::Helper, T::Downer}, {R::Cook, T::Greedy},  {R::Cook, T::Dummy}};
}

namespace {

std::size_t move_toward(std::size_t from, std::size_t to) {
    if (from == to) return kOcNoop;
    return to == kTop ? kOcUp : kOcDown;
}

}  // namespace

Overcooked::Overcooked(OvercookedTask task) : task_(task), teammate_(StatePolicy::uniform(1, 4)) {
    if (task_.ad_hoc_role == OvercookedRole::Cook &&
        (task_.teammate == OvercookedTeammate::Upper || task_.teammate == OvercookedTeammate::Downer)) {
        throw ModelError("upper and downer teammates are cooks; the ad hoc agent must be the helper");
    }
    std::vector<StatePolicy> by_action;
    const std::size_t variants = task_.teammate == OvercookedTeammate::Dummy ? 4 : 1;
    for (std::size_t a = 0; a < variants; ++a) {
        std::vector<std::size_t> actions(kNumStates);
        for (std::size_t x = 0; x < kNumStates; ++x) actions[x] = teammate_action(x, variants == 1 ? kOcAct : a);
        by_action.push_back(StatePolicy::deterministic(actions, 4));
    }
    teammate_ = variants == 1 ? TeammatePolicy(std::move(by_action.front())) : TeammatePolicy(std::move(by_action));
}

std::string Overcooked::label() const { return to_string(task_.ad_hoc_role) + "_with_" + to_string(task_.teammate); }

std::size_t Overcooked::encode(const Kitchen& k) {
    std::size_t x = k.helper_row;
    x = x * 2 + k.cook_row;
    x = x * 4 + k.helper_holds;
    x = x * 4 + k.cook_holds;
    x = x * 3 + k.top_balcony;
    x = x * 3 + k.bottom_balcony;
    x = x * 4 + k.pan;
    return x;
}

Kitchen Overcooked::decode(std::size_t x) {
    Kitchen k;
    k.pan = x % 4;
    x /= 4;
    k.bottom_balcony = x % 3;
    x /= 3;
    k.top_balcony = x % 3;
    x /= 3;
    k.cook_holds = x % 4;
    x /= 4;
    k.helper_holds = x % 4;
    x /= 4;
    k.cook_row = x % 2;
    k.helper_row = x / 2;
    return k;
}

Belief Overcooked::initial_belief() const { return Belief::point(kNumStates, encode(Kitchen{})); }

double Overcooked::apply(Kitchen& k, std::size_t helper_action, std::size_t cook_action) {
    if (helper_action == kOcUp) k.helper_row = kTop;
    if (helper_action == kOcDown) k.helper_row = kBottom;
    if (helper_action == kOcAct) {
        auto& slot = k.balcony(k.helper_row);
        if (k.helper_holds == kEmpty) {
            k.helper_holds = k.helper_row == kTop ? kOnion : kPlate;
        } else if ((k.helper_holds == kOnion || k.helper_holds == kPlate) && slot == kEmpty) {
            slot = k.helper_holds;
            k.helper_holds = kEmpty;
        }
    }

    bool delivered = false;
    if (cook_action == kOcUp) k.cook_row = kTop;
    if (cook_action == kOcDown) k.cook_row = kBottom;
    if (cook_action == kOcAct) {
        auto& slot = k.balcony(k.cook_row);
        if (k.cook_holds == kSoup) {
            k.cook_holds = kEmpty;
            delivered = true;
        } else if (k.cook_holds == kOnion && k.pan < kPanCooked) {
            ++k.pan;
            k.cook_holds = kEmpty;
        } else if (k.cook_holds == kPlate && k.pan == kPanCooked) {
            k.cook_holds = kSoup;
            k.pan = kPanEmpty;
        } else if (k.cook_holds == kEmpty && slot != kEmpty) {
            k.cook_holds = slot;
            slot = kEmpty;
        } else if (k.cook_holds != kEmpty && k.cook_holds != kSoup && slot == kEmpty) {
            slot = k.cook_holds;
            k.cook_holds = kEmpty;
        }
    }
    return delivered ? 15.0 : -1.0;
}

std::size_t Overcooked::greedy_helper_action(const Kitchen& k) {
    const std::size_t row = k.helper_row;
    const std::size_t other = 1 - row;
    if (k.helper_holds == kOnion || k.helper_holds == kPlate) {
        if (k.balcony(row) == kEmpty) return kOcAct;
        if (k.balcony(other) == kEmpty) return move_toward(row, other);
        return kOcNoop;
    }
    if (k.helper_holds != kEmpty) return kOcNoop;
    auto count = [&](std::size_t item) {
        return static_cast<std::size_t>(k.top_balcony == item) + static_cast<std::size_t>(k.bottom_balcony == item);
    };
    const std::size_t onions = (k.pan < kPanCooked ? k.pan : 0) + count(kOnion) + (k.cook_holds == kOnion ? 1 : 0);
    const std::size_t plates = count(kPlate) + (k.cook_holds == kPlate || k.cook_holds == kSoup ? 1 : 0);
    auto fetch = [&](std::size_t dispenser_row) {
        return row == dispenser_row ? kOcAct : move_toward(row, dispenser_row);
    };
    if (k.pan == kPanCooked && plates == 0) return fetch(kBottom);
    if (k.pan < kPanCooked && onions < 3) return fetch(kTop);
    if (plates == 0) return fetch(kBottom);
    return kOcNoop;
}

std::size_t Overcooked::greedy_cook_action(const Kitchen& k, int pinned) {
    const std::size_t row = k.cook_row;
    const std::size_t other = 1 - row;
    auto go = [&](std::size_t target) -> std::size_t {
        if (pinned >= 0 && target != static_cast<std::size_t>(pinned)) return kOcNoop;
        return move_toward(row, target);
    };
    if (pinned >= 0 && row != static_cast<std::size_t>(pinned)) return move_toward(row, static_cast<std::size_t>(pinned));
    switch (k.cook_holds) {
        case kSoup: return kOcAct;
        case kOnion:
        case kPlate: {
            const bool useful = (k.cook_holds == kOnion) == (k.pan < kPanCooked);
            // Useless items go back on a free balcony.
            if (useful || k.balcony(row) == kEmpty) return kOcAct;
            return go(other);
        }
        default: break;
    }
    const std::size_t need = k.pan == kPanCooked ? kPlate : kOnion;
    if (k.balcony(row) == need) return kOcAct;
    if (k.balcony(other) == need) return go(other);
    return go(k.helper_row);
}

std::size_t Overcooked::teammate_action(std::size_t x, std::size_t ad_hoc_action) const {
    const Kitchen k = decode(x);
    const bool teammate_is_cook = task_.ad_hoc_role == OvercookedRole::Helper;
    std::size_t greedy = 0;
    switch (task_.teammate) {
        case OvercookedTeammate::Upper: greedy = greedy_cook_action(k, kTop); break;
        case OvercookedTeammate::Downer: greedy = greedy_cook_action(k, kBottom); break;
        default: greedy = teammate_is_cook ? greedy_cook_action(k) : greedy_helper_action(k); break;
    }
    if (task_.teammate == OvercookedTeammate::Dummy && ad_hoc_action != kOcAct) return kOcNoop;
    return greedy;
}

std::pair<std::size_t, std::size_t> Overcooked::order(std::size_t ad_hoc, std::size_t teammate) const {
    if (task_.ad_hoc_role == OvercookedRole::Helper) return {ad_hoc, teammate};
    return {teammate, ad_hoc};
}

std::vector<JointOutcome> Overcooked::joint_outcomes(std::size_t x, std::size_t action,
                                                     std::size_t teammate_action) const {
    Kitchen k = decode(x);
    const auto [h, c] = order(action, teammate_action);
    const double r = apply(k, h, c);
    return {{1.0, encode(k), r}};
}

std::pair<std::size_t, double> Overcooked::sample_joint(std::size_t x, std::size_t action,
                                                        std::size_t teammate_action, Rng& /*rng*/) const {
    Kitchen k = decode(x);
    const auto [h, c] = order(action, teammate_action);
    const double r = apply(k, h, c);
    return {encode(k), r};
}

std::vector<KernelEntry> Overcooked::observation_distribution(std::size_t next, std::size_t /*action*/) const {
    return {{next, 1.0}};
}

std::size_t Overcooked::sample_observation(std::size_t next, std::size_t /*action*/, Rng& /*rng*/) const {
    return next;
}

BuiltTask build_overcooked(const OvercookedTask& task) {
    auto sim = std::make_shared<Overcooked>(task);
    return {sim->build_pomdp(), sim};
}

}  // namespace atpo::env
