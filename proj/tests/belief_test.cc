#include "safenav/belief.h"

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "safenav/errors.h"
#include "test_worlds.h"

namespace safenav {
namespace {

using testing::open_field;
using testing::paper_world;

constexpr Heading kDirs[] = {Heading::kN, Heading::kE, Heading::kS, Heading::kW};

// Ground-truth enumeration: every concrete obstacle position consistent with
// b, every legal obstacle step from it, classified by what the robot sees.
struct Expected {
  std::set<int> exact;
  std::uint32_t hidden = 0;
};

Expected enumerate(const BeliefState& b, const BeliefStep& step, const Environment& env) {
  std::vector<Cell> now;
  for (int i = 0; i < env.cell_count(); ++i) {
    const Cell c = env.cell_at(i);
    const bool member = b.is_exact()
                            ? c == b.cell
                            : (b.partitions >> env.partition_of(c) & 1u) && env.obstacle_allowed(c) &&
                                  !vis(step.observed_from, c, env);
    if (member) now.push_back(c);
  }
  Expected out;
  for (const Cell& c : now) {
    std::vector<Cell> next = {c};
    for (Heading h : kDirs) next.push_back(safenav::step(c, h));
    for (const Cell& n : next) {
      if (!env.obstacle_allowed(n)) continue;
      if (step.robot_stopped && n == step.robot) continue;
      if (vis(step.robot, n, env)) {
        out.exact.insert(env.cell_index(n));
      } else {
        out.hidden |= 1u << env.partition_of(n);
      }
    }
  }
  return out;
}

void expect_matches(const std::vector<BeliefState>& got, const Expected& want, const Environment& env) {
  std::set<int> exact;
  std::uint32_t hidden = 0;
  int regions = 0;
  for (const BeliefState& b : got) {
    if (b.is_exact()) {
      exact.insert(env.cell_index(b.cell));
    } else {
      hidden = b.partitions;
      ++regions;
    }
  }
  EXPECT_EQ(exact, want.exact);
  EXPECT_EQ(hidden, want.hidden);
  EXPECT_LE(regions, 1);
  EXPECT_EQ(got.size(), want.exact.size() + (want.hidden ? 1u : 0u));
}

Environment random_world(std::mt19937& rng) {
  std::uniform_int_distribution<int> dim(3, 8);
  Environment env = open_field(dim(rng), dim(rng));
  std::bernoulli_distribution wall(0.2);
  for (int i = 0; i < env.cell_count(); ++i) {
    if (wall(rng)) env.static_obstacles.push_back(env.cell_at(i));
  }
  // Vertical strips of random width.
  env.partitions.clear();
  std::uniform_int_distribution<int> strip(1, 3);
  for (int x = 0; x < env.width;) {
    const int w = std::min(strip(rng), env.width - x);
    env.partitions.emplace_back();
    for (int y = 0; y < env.height; ++y) {
      for (int dx = 0; dx < w; ++dx) env.partitions.back().push_back({x + dx, y});
    }
    x += w;
  }
  std::uniform_int_distribution<int> radius(1, 3);
  env.visibility_radius = radius(rng);
  return env;
}

Cell random_allowed(const Environment& env, std::mt19937& rng) {
  std::vector<Cell> cells;
  for (int i = 0; i < env.cell_count(); ++i) {
    if (env.obstacle_allowed(env.cell_at(i))) cells.push_back(env.cell_at(i));
  }
  return cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
}

TEST(BeliefSuccessor, ExactNearVisibilityBoundary) {
  Environment env = open_field(7, 1);
  env.visibility_radius = 2;
  const VisibilityTable vis(env);
  const BeliefStep step{{0, 0}, {0, 0}, true};
  const auto got = belief_successor(BeliefState::exact({2, 0}), step, env, vis);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], BeliefState::exact({1, 0}));
  EXPECT_EQ(got[1], BeliefState::exact({2, 0}));
  EXPECT_EQ(got[2], BeliefState::region(1u));
  expect_matches(got, enumerate(BeliefState::exact({2, 0}), step, env), env);
}

TEST(BeliefSuccessor, StoppedRobotIsNeverEntered) {
  Environment env = open_field(5, 1);
  const VisibilityTable vis(env);
  const auto got = belief_successor(BeliefState::exact({2, 0}), {{1, 0}, {1, 0}, true}, env, vis);
  for (const BeliefState& b : got) EXPECT_NE(b, BeliefState::exact({1, 0}));
  const auto moving = belief_successor(BeliefState::exact({2, 0}), {{1, 0}, {0, 0}, false}, env, vis);
  EXPECT_NE(std::find(moving.begin(), moving.end(), BeliefState::exact({1, 0})), moving.end());
}

// Room x = 4..6 behind a wall at x = 3 with its only exit at (3, 1); the
// robot at (1, 1) watches the exit but not the room.
TEST(BeliefSuccessor, ClosedRoomRegionPersistsUntilExitSeen) {
  Environment env = open_field(7, 3);
  env.static_obstacles = {{3, 0}, {3, 2}};
  env.partitions.assign(2, {});
  for (int i = 0; i < env.cell_count(); ++i) {
    const Cell c = env.cell_at(i);
    env.partitions[c.x >= 4 ? 1 : 0].push_back(c);
  }
  const VisibilityTable vis(env);
  const Cell robot{1, 1};
  ASSERT_TRUE(vis(robot, {3, 1}));
  BeliefState b = BeliefState::region(2u);
  for (int t = 0; t < 10; ++t) {
    const auto got = belief_successor(b, {robot, robot, true}, env, vis);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0], BeliefState::exact({3, 1}));
    EXPECT_EQ(got[1], BeliefState::region(2u));
    b = got[1];
  }
  const auto left = belief_successor(BeliefState::exact({3, 1}), {robot, robot, true}, env, vis);
  for (const BeliefState& s : left) {
    if (s.is_exact()) EXPECT_TRUE(vis(robot, s.cell));
  }
}

TEST(BeliefSuccessor, FullyVisibleGivesOnlyExact) {
  const Environment env = paper_world();
  const VisibilityTable all(env, true);
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Cell o = random_allowed(env, rng);
    const Cell r = random_allowed(env, rng);
    for (const BeliefState& b : belief_successor(BeliefState::exact(o), {r, r, true}, env, all)) {
      EXPECT_TRUE(b.is_exact());
    }
  }
}

TEST(BeliefSuccessor, AgreesWithGroundTruthEnumeration) {
  std::mt19937 rng(11);
  int regions = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Environment env = random_world(rng);
    std::vector<Cell> allowed;
    for (int i = 0; i < env.cell_count(); ++i) {
      if (env.obstacle_allowed(env.cell_at(i))) allowed.push_back(env.cell_at(i));
    }
    if (allowed.size() < 2) continue;
    const VisibilityTable vis(env);
    const BeliefStep step{random_allowed(env, rng), random_allowed(env, rng),
                          std::bernoulli_distribution(0.5)(rng)};
    BeliefState b;
    if (std::bernoulli_distribution(0.5)(rng)) {
      b = BeliefState::exact(random_allowed(env, rng));
    } else {
      const std::uint32_t all = (1u << env.partitions.size()) - 1u;
      b = BeliefState::region(std::uniform_int_distribution<std::uint32_t>(1, all)(rng));
      ++regions;
    }
    SCOPED_TRACE(trial);
    expect_matches(belief_successor(b, step, env, vis), enumerate(b, step, env), env);
  }
  EXPECT_GT(regions, 100);
}

TEST(BeliefSuccessor, VisibilityConsistency) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const Environment env = random_world(rng);
    const VisibilityTable vis(env);
    const Cell robot = random_allowed(env, rng);
    const BeliefState b = BeliefState::exact(random_allowed(env, rng));
    for (const BeliefState& s : belief_successor(b, {robot, robot, false}, env, vis)) {
      if (s.is_exact()) {
        EXPECT_TRUE(vis(robot, s.cell));
        continue;
      }
      for (std::size_t p = 0; p < env.partitions.size(); ++p) {
        if (!(s.partitions >> p & 1u)) continue;
        bool hidden_cell = false;
        for (const Cell& c : env.partitions[p]) hidden_cell |= env.obstacle_allowed(c) && !vis(robot, c);
        EXPECT_TRUE(hidden_cell);
      }
      for (const Cell& c : belief_cells(s, robot, env, vis)) EXPECT_FALSE(vis(robot, c));
    }
  }
}

// Robot and obstacle both random-walk on paper_world; the robot never steps
// onto the obstacle and the obstacle never steps onto a robot that stopped. The tracked belief must contain the truth
// at every tick.
TEST(BeliefSoundness, RandomWalks) {
  for (const bool single : {false, true}) {
    Environment env = paper_world();
    if (single) env = with_single_partition(env);
    const VisibilityTable vis(env);
    std::mt19937 rng(single ? 99 : 42);
    int region_ticks = 0;
    for (int run = 0; run < 1000; ++run) {
      Cell robot = env.robot_start.cell;
      Cell observed_from = robot;
      Cell truth = env.obstacle_start;
      bool stopped = true;
      BeliefState b = initial_belief(env, vis);
      ASSERT_TRUE(belief_contains(b, truth, robot, env, vis));
      for (int tick = 0; tick < 60; ++tick) {
        std::vector<Cell> moves;
        if (!(stopped && truth == robot)) moves.push_back(truth);
        for (Heading h : kDirs) {
          const Cell n = step(truth, h);
          if (env.obstacle_allowed(n) && !(stopped && n == robot)) moves.push_back(n);
        }
        truth = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
        const auto options = belief_successor(b, {robot, observed_from, stopped}, env, vis);
        b = observe(options, truth, robot, env, vis);
        ASSERT_TRUE(belief_contains(b, truth, robot, env, vis)) << "run " << run << " tick " << tick;
        region_ticks += !b.is_exact();

        std::vector<Heading> dirs;
        for (Heading h : kDirs) {
          if (coarse_move_allowed(robot, h, env) && step(robot, h) != truth) dirs.push_back(h);
        }
        observed_from = robot;
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, dirs.size())(rng);
        stopped = pick == dirs.size();
        if (!stopped) robot = step(robot, dirs[pick]);
      }
    }
    EXPECT_GT(region_ticks, 1000);
  }
}

TEST(Belief, ObserveRejectsInconsistentTruth) {
  Environment env = open_field(7, 1);
  const VisibilityTable vis(env);
  const auto options = belief_successor(BeliefState::exact({2, 0}), {{0, 0}, {0, 0}, true}, env, vis);
  EXPECT_EQ(observe(options, {3, 0}, {0, 0}, env, vis), BeliefState::region(1u));
  EXPECT_THROW(observe(options, {0, 0}, {0, 0}, env, vis), DomainError);
}

TEST(Belief, InitialBeliefAndTrace) {
  const Environment env = paper_world();
  const VisibilityTable vis(env);
  const BeliefState b = initial_belief(env, vis);
  EXPECT_FALSE(b.is_exact());
  EXPECT_EQ(b.partitions, 1u << env.partition_of(env.obstacle_start));
  EXPECT_EQ(to_string(b), "R{5}");
  const std::string line = belief_trace_line(3, {0, 2}, b, {0, 2}, env, vis);
  EXPECT_EQ(line.rfind("tick 3 robot 0 2 region 5 cells ", 0), 0u) << line;
  EXPECT_NE(line.find("9 4"), std::string::npos);
  EXPECT_EQ(belief_trace_line(0, {1, 1}, BeliefState::exact({2, 1}), {1, 1}, env, vis),
            "tick 0 robot 1 1 exact 2 1");
  EXPECT_EQ(to_string(BeliefState::region(0b101u)), "R{0,2}");
}

}  // namespace
}  // namespace safenav
