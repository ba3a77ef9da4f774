#include "safenav/navigation.h"

#include <chrono>
#include <cstdio>

#include <gtest/gtest.h>

#include "parity_oracle.h"
#include "test_worlds.h"

namespace safenav {
namespace {

using testing::open_field;
using testing::paper_world;
using testing::ring;

TEST(NavigationGame, RingWithLivenessIsRealizable) {
  const NavigationGame ng = encode_navigation_game(ring());
  const SolveResult r = solve_gr1(ng.game, ng.spec);
  ASSERT_TRUE(r.realizable);
  EXPECT_TRUE(check_strategy(ng.game, ng.spec, r.strategy).ok());
}

TEST(NavigationGame, RingWithoutLivenessIsUnrealizable) {
  const NavigationGame ng = encode_navigation_game(ring(), false);
  EXPECT_FALSE(solve_gr1(ng.game, ng.spec).realizable);
}

TEST(NavigationGame, RingAgreesWithParityOracle) {
  Environment hidden = ring();
  hidden.visibility_radius = 1;
  hidden.partitions.assign(2, {});
  for (int i = 0; i < hidden.cell_count(); ++i) {
    const Cell c = hidden.cell_at(i);
    hidden.partitions[c.x < 2 ? 0 : 1].push_back(c);
  }
  for (const NavigationGame& ng : {encode_navigation_game(ring()), encode_navigation_game(ring(), false),
                                   build_belief_game(hidden), build_belief_game(hidden, false)}) {
    const SolveResult r = solve_gr1(ng.game, ng.spec);
    const std::vector<char> oracle = testing::oracle_winning(ng.game, ng.spec);
    for (int s = 0; s < ng.game.num_states; ++s) {
      ASSERT_EQ(r.strategy.winning.test(s), oracle[static_cast<std::size_t>(s)] != 0) << ng.game.state_name(s);
    }
  }
}

TEST(NavigationGame, StoppedRobotIsNeverEntered) {
  for (const NavigationGame& ng : {encode_navigation_game(ring()), build_belief_game(paper_world())}) {
    for (int s = 0; s < ng.game.num_states; ++s) {
      const NavState& st = ng.states[static_cast<std::size_t>(s)];
      if (st.moved || !ng.spec.safe(s)) continue;
      for (int o = ng.game.env_begin[static_cast<std::size_t>(s)];
           o < ng.game.env_begin[static_cast<std::size_t>(s) + 1]; ++o) {
        const BeliefState& b = ng.option_belief[static_cast<std::size_t>(o)];
        EXPECT_FALSE(b.is_exact() && b.cell == st.robot) << to_string(st);
      }
    }
  }
}

TEST(NavigationGame, SafetyForbidsCollisionAndSwap) {
  const Environment env = ring();
  const VisibilityTable vis(env, true);
  EXPECT_FALSE(nav_state_safe({{0, 0}, BeliefState::exact({0, 0}), Heading::kN, false}, env, vis));
  // Robot moved north from (0, 0) to (0, 1) while the obstacle entered (0, 0).
  EXPECT_FALSE(nav_state_safe({{0, 1}, BeliefState::exact({0, 0}), Heading::kN, true}, env, vis));
  EXPECT_FALSE(nav_state_safe({{0, 1}, BeliefState::exact({0, 2}), Heading::kN, true}, env, vis));
  EXPECT_TRUE(nav_state_safe({{0, 1}, BeliefState::exact({0, 2}), Heading::kN, false}, env, vis));
  EXPECT_TRUE(nav_state_safe({{0, 1}, BeliefState::exact({2, 2}), Heading::kN, true}, env, vis));
}

TEST(NavigationGame, NoReversal) {
  const Environment env = ring();
  const auto acts = robot_actions({{0, 1}, BeliefState::exact({3, 0}), Heading::kN, true}, env);
  ASSERT_EQ(acts.size(), 2u);
  EXPECT_FALSE(acts[0].has_value());
  EXPECT_EQ(acts[1], Heading::kN);
}

TEST(NavigationGame, FullyVisibleBeliefGameIsObservableGame) {
  Environment env = ring();
  env.static_obstacles.clear();
  env.visibility_radius = 20;
  const NavigationGame a = encode_navigation_game(env);
  const NavigationGame b = build_belief_game(env);
  ASSERT_EQ(a.game.num_states, b.game.num_states);
  EXPECT_EQ(a.game.sys_target, b.game.sys_target);
  EXPECT_EQ(a.game.env_begin, b.game.env_begin);
  for (int s = 0; s < a.game.num_states; ++s) ASSERT_EQ(a.states[s], b.states[s]);
  EXPECT_EQ(solve_gr1(a.game, a.spec).realizable, solve_gr1(b.game, b.spec).realizable);
}

TEST(BeliefGame, PaperWorldDichotomy) {
  const auto start = std::chrono::steady_clock::now();
  const NavigationGame fine = build_belief_game(paper_world());
  const SolveResult r = solve_gr1(fine.game, fine.spec);
  EXPECT_TRUE(r.realizable) << fine.game.num_states << " states";
  if (r.realizable) {
    const CheckReport report = check_strategy(fine.game, fine.spec, r.strategy);
    EXPECT_TRUE(report.ok()) << report.violations.front().detail;
  }
  const NavigationGame coarse = build_belief_game(with_single_partition(paper_world()));
  EXPECT_FALSE(solve_gr1(coarse.game, coarse.spec).realizable) << coarse.game.num_states << " states";
  EXPECT_TRUE(testing::oracle_winning(fine.game, fine.spec)[0]);
  EXPECT_FALSE(testing::oracle_winning(coarse.game, coarse.spec)[0]);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 600.0);
  std::printf("partitioned %d states, single %d states, %.1f s\n", fine.game.num_states,
              coarse.game.num_states, seconds);
}

TEST(BeliefGame, LabelsAndLookup) {
  const NavigationGame ng = build_belief_game(paper_world());
  EXPECT_EQ(ng.game.state_name(0), "r=(0,2) b=R{5} h=E a=stop");
  EXPECT_EQ(ng.index_of(ng.states[5]), 5);
  const int o = ng.game.env_begin[0];
  EXPECT_EQ(ng.option_for(0, ng.option_belief[static_cast<std::size_t>(o)]), o);
  EXPECT_EQ(ng.option_for(0, BeliefState::exact({0, 2})), -1);
  EXPECT_FALSE(ng.action_of(ng.game.sys_begin[static_cast<std::size_t>(o)]).has_value());
}

}  // namespace
}  // namespace safenav
