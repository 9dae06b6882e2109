#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "atpo/env/night_pursuit.hpp"
#include "atpo/env/overcooked.hpp"
#include "atpo/env/pursuit_po.hpp"
#include "oracles.hpp"

namespace atpo::env {
namespace {

NightPursuitTask night(int w, int h, double eps, std::array<Cell, 2> preys = {{{0, 0}, {2, 2}}}) {
    return {preys, {w, h, false, NoiseModel::constant(eps)}};
}

PursuitPOTask pursuit(PursuitTeammate type, int side = 5) { return {type, {side, side, true, NoiseModel::decay()}}; }

std::vector<KernelEntry> dense_row(const StochasticKernel& k, std::size_t a, std::size_t x) {
    const auto r = k.row(a, x);
    return {r.begin(), r.end()};
}

// --- grid ---

TEST(Grid, StepsAndWalls) {
    const GridSpec bounded{3, 3, false, {}};
    EXPECT_FALSE(bounded.step({0, 0}, kUp));
    EXPECT_EQ(*bounded.step({0, 0}, kDown), (Cell{0, 1}));
    const GridSpec torus{5, 5, true, {}};
    EXPECT_EQ(*torus.step({0, 0}, kLeft), (Cell{4, 0}));
    EXPECT_EQ(torus.offset({0, 0}, {4, 3}), (Cell{-1, -2}));
    EXPECT_EQ(torus.manhattan({0, 0}, {4, 4}), 2);
    EXPECT_EQ(torus.chebyshev({0, 0}, {3, 1}), 2);
    EXPECT_THROW((GridSpec{2, 5, false, {}}.validate()), ModelError);
    EXPECT_THROW((GridSpec{3, 3, false, NoiseModel::constant(1.5)}.validate()), ModelError);
}

TEST(Grid, NoiseDecayClamps) {
    const auto decay = NoiseModel::decay();
    EXPECT_NEAR(decay.at(1), 0.85, 1e-15);
    EXPECT_EQ(decay.at(7), 0.0);
    EXPECT_EQ(NoiseModel::decay(1.0, 0.15).at(0), 1.0);
    EXPECT_EQ(NoiseModel::decay(2.0, 0.15).at(1), 1.0);
}

TEST(Grid, DecayClampsToZeroBeyondRange) {
    // 1 - 0.15 d drops below zero at d = 7; the probability is clamped there.
    const auto decay = NoiseModel::decay();
    EXPECT_NEAR(decay.at(6), 0.1, 1e-12);
    EXPECT_EQ(decay.at(10), 0.0);
}

TEST(Grid, GreedyMovePrefersLargerAxisThenHorizontal) {
    const GridSpec g{7, 7, false, {}};
    EXPECT_EQ(greedy_move(g, {2, 3}, {4, 2}), kRight);  // 2 right, 1 up
    EXPECT_EQ(greedy_move(g, {2, 3}, {3, 1}), kUp);
    EXPECT_EQ(greedy_move(g, {2, 3}, {1, 4}), kLeft);  // tie: horizontal
    EXPECT_EQ(greedy_move(g, {2, 3}, {2, 3}), kStay);
}

TEST(Grid, AstarMatchesBfsOracle) {
    Rng rng(1);
    for (bool torus : {false, true}) {
        const GridSpec g{6, 5, torus, {}};
        for (int rep = 0; rep < 200; ++rep) {
            const Cell a = g.cell(rng.below(g.num_cells())), b = g.cell(rng.below(g.num_cells()));
            const Cell wall = g.cell(rng.below(g.num_cells()));
            if (wall == a || wall == b) continue;
            const std::array<Cell, 1> blocked{wall};
            const auto got = astar_distance(g, a, b, blocked);
            const int want = testing::bfs_grid_distance(6, 5, torus, {a.x, a.y}, {b.x, b.y}, std::pair{wall.x, wall.y});
            ASSERT_TRUE(got);
            EXPECT_EQ(*got, want);
        }
    }
}

// --- night-time pursuit ---

TEST(NightPursuit, StateCounts) {
    EXPECT_EQ(NightPursuit(night(5, 5, 0.3)).num_states(), 625u);
    EXPECT_EQ(NightPursuit(night(3, 3, 0.3)).num_states(), 81u);
    EXPECT_EQ(NightPursuit(night(6, 6, 0.3)).num_states(), 1296u);
}

TEST(NightPursuit, RejectsBadTasks) {
    EXPECT_THROW(NightPursuit(night(3, 3, 0.3, {{{0, 0}, {3, 0}}})), ModelError);
    EXPECT_THROW(NightPursuit(night(3, 3, 0.3, {{{1, 1}, {1, 1}}})), ModelError);
    EXPECT_THROW(NightPursuit(night(2, 3, 0.3)), ModelError);
}

TEST(NightPursuit, TeammateAboveSeenWithoutNoise) {
    const NightPursuit dom(night(3, 3, 0.0));
    const std::size_t x = dom.encode({1, 1}, {1, 0});
    const auto obs = dom.observation_distribution(x, kStay);
    ASSERT_EQ(obs.size(), 1u);
    EXPECT_EQ(obs[0].prob, 1.0);
    const auto reading = NightPursuit::decode_observation(obs[0].col);
    EXPECT_EQ(reading[0], kTeammate);
    EXPECT_EQ(reading[1], kNothing);
}

TEST(NightPursuit, ObservationNoiseMissesEachSlot) {
    // prey left of the agent, teammate below: two non-empty slots.
    const NightPursuit dom(night(3, 3, 0.3, {{{0, 1}, {2, 2}}}));
    const std::size_t x = dom.encode({1, 1}, {1, 2});
    double seen_both = 0.0, seen_none = 0.0;
    for (const auto& e : dom.observation_distribution(x, kStay)) {
        const auto r = NightPursuit::decode_observation(e.col);
        if (r[1] == kTeammate && r[2] == kPrey) seen_both = e.prob;
        if (r == std::array<std::size_t, 4>{}) seen_none = e.prob;
    }
    EXPECT_NEAR(seen_both, 0.49, 1e-12);
    EXPECT_NEAR(seen_none, 0.09, 1e-12);
}

TEST(NightPursuit, TeammateTieGoesToLowerIndexPrey) {
    const NightPursuit a(night(3, 3, 0.0, {{{0, 0}, {2, 2}}}));
    EXPECT_EQ(a.teammate_move({1, 1}), kLeft);
    const NightPursuit b(night(3, 3, 0.0, {{{2, 2}, {0, 0}}}));
    EXPECT_EQ(b.teammate_move({1, 1}), kRight);
    EXPECT_EQ(a.teammate_move({0, 0}), kStay);
}

TEST(NightPursuit, WallsBlockAndMovesFailWithEpsilon) {
    const NightPursuit dom(night(3, 3, 0.3, {{{0, 0}, {2, 2}}}));
    const std::size_t x = dom.encode({0, 1}, {2, 2});  // teammate sits on a prey
    double stayed = 0.0;
    for (const auto& o : dom.joint_outcomes(x, kLeft, kStay)) stayed += o.next == x ? o.prob : 0.0;
    EXPECT_NEAR(stayed, 1.0, 1e-12);
    const auto up = dom.joint_outcomes(x, kUp, kStay);
    double captured = 0.0;
    for (const auto& o : up) {
        if (o.next == dom.encode({0, 0}, {2, 2})) {
            captured += o.prob;
            EXPECT_EQ(o.reward, 100.0);
        }
    }
    EXPECT_NEAR(captured, 0.7, 1e-12);
}

TEST(NightPursuit, PoolIsSeededAndDistinct) {
    const GridSpec g{5, 5, false, NoiseModel::constant(0.3)};
    const auto a = night_pursuit_pool(g, 32, 7);
    const auto b = night_pursuit_pool(g, 32, 7);
    ASSERT_EQ(a.size(), 32u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].preys, b[i].preys);
        EXPECT_NE(a[i].preys[0], a[i].preys[1]);
        for (std::size_t j = 0; j < i; ++j) {
            const bool same = (a[i].preys[0] == a[j].preys[0] && a[i].preys[1] == a[j].preys[1]) ||
                              (a[i].preys[0] == a[j].preys[1] && a[i].preys[1] == a[j].preys[0]);
            EXPECT_FALSE(same);
        }
    }
    EXPECT_THROW(night_pursuit_pool({3, 3, false, {}}, 37, 1), ModelError);
}

// --- partially observable pursuit ---

TEST(PursuitPO, StateCount) {
    EXPECT_EQ(PursuitPO(pursuit(PursuitTeammate::Greedy)).num_states(), 552u);
    EXPECT_EQ(PursuitPO(pursuit(PursuitTeammate::Greedy, 3)).num_states(), 56u);
}

TEST(PursuitPO, MissProbabilityByChebyshevDistance) {
    const PursuitPO dom(pursuit(PursuitTeammate::Greedy));
    EXPECT_NEAR(dom.miss_probability({1, 0}), 0.85, 1e-12);
    EXPECT_NEAR(dom.miss_probability({4, 4}), 0.85, 1e-12);
    EXPECT_NEAR(dom.miss_probability({2, 3}), 0.7, 1e-12);
    PursuitPOTask big = pursuit(PursuitTeammate::Greedy, 13);
    const PursuitPO wide(big);
    EXPECT_EQ(wide.miss_probability({6, 0}), big.grid.noise.at(6));
    EXPECT_EQ(NoiseModel::decay().at(7), 0.0);
}

TEST(PursuitPO, NoiseFreeObservationsAreExact) {
    PursuitPOTask task = pursuit(PursuitTeammate::Greedy, 3);
    task.grid.noise = NoiseModel::decay(0.0, 0.15);
    const auto built = build_pursuit_po(task);
    const auto& dom = static_cast<const PursuitPO&>(*built.simulator);
    for (std::size_t x = 0; x < dom.num_states(); ++x) {
        const auto [t, p] = dom.decode(x);
        const auto obs = dom.observation_distribution(x, 0);
        ASSERT_EQ(obs.size(), 1u);
        EXPECT_EQ(obs[0].col, dom.encode_observation(t, p));
    }
    Rng rng(3);
    auto s = reset(dom, rng);
    const auto out = simulate_step(dom, s, kUp, rng);
    const auto r = belief_update(built.pomdp, built.pomdp.initial_belief(), kUp, out.observation);
    ASSERT_TRUE(r.possible());
    EXPECT_EQ((*r.belief)[out.next.state], 1.0);
}

TEST(PursuitPO, GreedyTeammateFollowsLargerAxis) {
    const PursuitPO dom(pursuit(PursuitTeammate::Greedy));
    const auto d = dom.teammate_distribution(dom.encode({2, 2}, {4, 1}));  // prey 2 right, 1 up
    EXPECT_EQ(d[kRight], 1.0);
}

TEST(PursuitPO, TeammateAwareRoutesAroundAgent) {
    // Teammate left of the agent, prey right of it; the short greedy way runs through the agent.
    const PursuitPO aware(pursuit(PursuitTeammate::TeammateAware));
    const PursuitPO greedy(pursuit(PursuitTeammate::Greedy));
    const Cell t{4, 0}, p{1, 0};
    const auto g = greedy.teammate_distribution(greedy.encode(t, p));
    EXPECT_EQ(g[kRight], 1.0);
    const auto a = aware.teammate_distribution(aware.encode(t, p));
    std::size_t move = 0;
    while (a[move] != 1.0) ++move;
    EXPECT_NE(move, kRight);
    const Cell n = *aware.grid().step(t, move);
    const auto origin = std::pair{0, 0};
    const int here = testing::bfs_grid_distance(5, 5, true, {t.x, t.y}, {p.x, p.y}, origin);
    const int there = testing::bfs_grid_distance(5, 5, true, {n.x, n.y}, {p.x, p.y}, origin);
    EXPECT_EQ(there + 1, here);
}

TEST(PursuitPO, TeammatesStayWhenAdjacentToPrey) {
    for (auto type : {PursuitTeammate::Greedy, PursuitTeammate::TeammateAware, PursuitTeammate::ProbabilisticDestinations}) {
        const PursuitPO dom(pursuit(type));
        EXPECT_EQ(dom.teammate_distribution(dom.encode({2, 2}, {2, 3}))[kStay], 1.0);
    }
}

TEST(PursuitPO, ProbabilisticDestinationsAvoidAgentTarget) {
    const PursuitPO dom(pursuit(PursuitTeammate::ProbabilisticDestinations));
    // Prey two cells right; the agent's capture cell is (1,0), the far side of the prey is (3,0).
    const auto d = dom.teammate_distribution(dom.encode({3, 2}, {2, 0}));
    double total = 0.0;
    for (double v : d) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(d[kUp], 1.0);
}

TEST(PursuitPO, CorneringAndParsing) {
    const PursuitPO dom(pursuit(PursuitTeammate::Greedy));
    // The agent sits at the origin, so the prey must be next to it as well.
    EXPECT_TRUE(dom.cornered({2, 0}, {1, 0}));
    EXPECT_TRUE(dom.cornered({4, 4}, {0, 4}));
    EXPECT_FALSE(dom.cornered({2, 1}, {1, 1}));
    EXPECT_FALSE(dom.cornered({3, 3}, {1, 0}));
    EXPECT_EQ(parse_pursuit_teammate("teammate_aware"), PursuitTeammate::TeammateAware);
    EXPECT_THROW(parse_pursuit_teammate("lazy"), ModelError);
    EXPECT_THROW(PursuitPO(PursuitPOTask{static_cast<PursuitTeammate>(7), {5, 5, true, NoiseModel::decay()}}), ModelError);
}

// --- overcooked ---

TEST(Overcooked, TaskCombinations) {
    EXPECT_EQ(overcooked_tasks().size(), 6u);
    EXPECT_THROW(Overcooked({OvercookedRole::Cook, OvercookedTeammate::Upper}), ModelError);
    EXPECT_THROW(Overcooked({OvercookedRole::Cook, OvercookedTeammate::Downer}), ModelError);
    EXPECT_THROW(parse_overcooked_teammate("chef"), ModelError);
    EXPECT_EQ(parse_overcooked_role("cook"), OvercookedRole::Cook);
}

TEST(Overcooked, EncodeDecodeBijection) {
    for (std::size_t x = 0; x < Overcooked::kNumStates; ++x) EXPECT_EQ(Overcooked::encode(Overcooked::decode(x)), x);
}

TEST(Overcooked, IdentityObservations) {
    const auto built = build_overcooked({OvercookedRole::Helper, OvercookedTeammate::Greedy});
    EXPECT_TRUE(built.pomdp.has_identity_observations());
    EXPECT_EQ(built.pomdp.num_states(), 2304u);
}

TEST(Overcooked, DeliveryRewardsFifteen) {
    Kitchen k;
    k.cook_holds = kSoup;
    EXPECT_EQ(Overcooked::apply(k, kOcNoop, kOcAct), 15.0);
    EXPECT_EQ(k.cook_holds, kEmpty);
    EXPECT_EQ(Overcooked::apply(k, kOcNoop, kOcAct), -1.0);
}

TEST(Overcooked, DummyWaitsUnlessAdHocActs) {
    for (auto role : {OvercookedRole::Helper, OvercookedRole::Cook}) {
        const Overcooked dom({role, OvercookedTeammate::Dummy});
        for (std::size_t x = 0; x < Overcooked::kNumStates; ++x) {
            const auto outs = dom.joint_outcomes(x, kOcNoop, dom.teammate_action(x, kOcNoop));
            ASSERT_EQ(outs.size(), 1u);
            EXPECT_EQ(outs[0].next, x);
            EXPECT_EQ(dom.teammate_action(x, kOcUp), kOcNoop);
        }
    }
}

TEST(Overcooked, GreedyTeamCooksSoups) {
    const auto built = build_overcooked({OvercookedRole::Helper, OvercookedTeammate::Greedy});
    const auto& dom = static_cast<const Overcooked&>(*built.simulator);
    Rng rng(1);
    auto s = reset(dom, rng);
    int soups = 0;
    for (int t = 0; t < 75; ++t) {
        const auto out = simulate_step(dom, s, Overcooked::greedy_helper_action(Overcooked::decode(s.state)), rng);
        if (out.reward == 15.0) ++soups;
        s = out.next;
    }
    EXPECT_GE(soups, 3);
}

TEST(Overcooked, PinnedCooksStayOnTheirRow) {
    for (std::size_t x = 0; x < Overcooked::kNumStates; ++x) {
        Kitchen k = Overcooked::decode(x);
        if (k.cook_row != kTop) continue;
        EXPECT_NE(Overcooked::greedy_cook_action(k, kTop), kOcDown);
    }
}

// --- shared invariants ---

std::vector<DomainPtr> small_domains() {
    std::vector<DomainPtr> out;
    out.push_back(std::make_shared<NightPursuit>(night(3, 3, 0.3)));
    out.push_back(std::make_shared<NightPursuit>(night(3, 3, 0.0, {{{1, 0}, {2, 1}}})));
    for (auto type : {PursuitTeammate::Greedy, PursuitTeammate::TeammateAware, PursuitTeammate::ProbabilisticDestinations}) {
        out.push_back(std::make_shared<PursuitPO>(pursuit(type, 3)));
    }
    for (const auto& task : overcooked_tasks()) out.push_back(std::make_shared<Overcooked>(task));
    return out;
}

TEST(Invariants, KernelsAreRowStochastic) {
    for (const auto& dom : small_domains()) {
        const auto pomdp = dom->build_pomdp();
        EXPECT_LT(pomdp.base().transition().max_row_sum_error(), 1e-9) << dom->label();
        EXPECT_LT(pomdp.observation().max_row_sum_error(), 1e-9) << dom->label();
        EXPECT_TRUE(pomdp.base().transition().entries_valid());
        const auto mmdp = dom->build_mmdp();
        EXPECT_LT(mmdp.transition().max_row_sum_error(), 1e-9) << dom->label();
        EXPECT_EQ(mmdp.num_joint_actions(), dom->num_actions() * dom->num_teammate_actions());
    }
}

TEST(Invariants, RewardPlacementAndAbsorption) {
    for (const auto& dom : small_domains()) {
        const bool overcooked = dynamic_cast<const Overcooked*>(dom.get()) != nullptr;
        for (std::size_t x = 0; x < dom->num_states(); ++x) {
            for (std::size_t a = 0; a < dom->num_actions(); ++a) {
                for (std::size_t b = 0; b < dom->num_teammate_actions(); ++b) {
                    for (const auto& o : dom->joint_outcomes(x, a, b)) {
                        if (overcooked) {
                            const auto* oc = static_cast<const Overcooked*>(dom.get());
                            const std::size_t cook_action = oc->task().ad_hoc_role == OvercookedRole::Cook ? a : b;
                            const bool delivery = Overcooked::decode(x).cook_holds == kSoup && cook_action == kOcAct;
                            EXPECT_EQ(o.reward, delivery ? 15.0 : -1.0);
                        } else if (dom->is_terminal(x)) {
                            EXPECT_EQ(o.next, x);
                            EXPECT_EQ(o.reward, 0.0);
                        } else {
                            EXPECT_EQ(o.reward, dom->is_terminal(o.next) ? 100.0 : -1.0) << dom->label();
                        }
                    }
                }
            }
        }
    }
}

TEST(Simulator, RefusesFinishedEpisodesAndBadActions) {
    const NightPursuit dom(night(3, 3, 0.3));
    Rng rng(1);
    EXPECT_THROW(simulate_step(dom, {0, 0, true}, 0, rng), SimulationError);
    EXPECT_THROW(simulate_step(dom, {1, 0, false}, 5, rng), SimulationError);
}

TEST(Simulator, NoiseFreeSamplesStayInKernelSupport) {
    const auto built = build_night_pursuit(night(3, 3, 0.0, {{{1, 0}, {2, 1}}}));
    const auto& T = built.pomdp.base().transition();
    Rng rng(2);
    auto s = reset(*built.simulator, rng);
    for (int i = 0; i < 10000; ++i) {
        if (s.done) s = reset(*built.simulator, rng);
        const std::size_t a = rng.below(5);
        const auto out = simulate_step(*built.simulator, s, a, rng);
        EXPECT_GT(T.at(a, s.state, out.next.state), 0.0);
        EXPECT_GT(built.pomdp.observation().at(a, out.next.state, out.observation), 0.0);
        EXPECT_EQ(out.next.step, s.step + 1);
        s = out.next;
    }
}

TEST(Simulator, FrequenciesMatchKernelRows) {
    const auto built = build_pursuit_po(pursuit(PursuitTeammate::ProbabilisticDestinations, 3));
    const auto& dom = *built.simulator;
    const auto& T = built.pomdp.base().transition();
    const auto& O = built.pomdp.observation();
    Rng rng(4);
    constexpr std::size_t kSamples = 100000;
    const std::size_t x = 7, a = kLeft;
    std::vector<std::size_t> next_counts(dom.num_states()), obs_counts(dom.num_observations());
    for (std::size_t i = 0; i < kSamples; ++i) {
        const auto out = simulate_step(dom, {x, 0, false}, a, rng);
        ++next_counts[out.next.state];
        ++obs_counts[dom.sample_observation(x, a, rng)];
    }
    std::vector<double> tp(dom.num_states()), op(dom.num_observations());
    for (std::size_t y = 0; y < tp.size(); ++y) tp[y] = T.at(a, x, y);
    for (std::size_t z = 0; z < op.size(); ++z) op[z] = O.at(a, x, z);
    const auto ct = testing::chi_squared(next_counts, tp);
    const auto co = testing::chi_squared(obs_counts, op);
    EXPECT_TRUE(ct.support_ok);
    EXPECT_TRUE(co.support_ok);
    EXPECT_GT(ct.p_value, 0.001);
    EXPECT_GT(co.p_value, 0.001);
}

}  // namespace
}  // namespace atpo::env
