#include "safenav/simulation.h"

#include <chrono>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "safenav/errors.h"
#include "test_worlds.h"

namespace safenav {
namespace {

using testing::paper_world;

std::shared_ptr<const Planner> planner() {
  static const auto p = std::make_shared<const Planner>(paper_world());
  return p;
}

void expect_accepted(const SimulationTrace& t, const std::string& label) {
  const Outcome& o = t.outcome;
  EXPECT_TRUE(o.aborted.empty()) << label << ": " << o.aborted;
  EXPECT_EQ(o.collisions, 0) << label;
  EXPECT_EQ(o.safety_violations, 0) << label;
  EXPECT_EQ(o.belief_failures, 0) << label;
  EXPECT_FALSE(o.env_loss) << label;
  EXPECT_GE(o.goal_visits[0], 2) << label;
  EXPECT_GE(o.goal_visits[1], 2) << label;
  EXPECT_LE(o.max_goal_gap, o.liveness_bound) << label;
}

TEST(Simulation, RandomObstacleEpisodes) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    auto model = random_obstacle(seed);
    expect_accepted(run_episode(planner(), *model), "random " + std::to_string(seed));
  }
}

TEST(Simulation, AdversarialObstacleEpisodes) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    auto model = adversarial_obstacle(seed);
    expect_accepted(run_episode(planner(), *model), "adversarial " + std::to_string(seed));
  }
}

TEST(Simulation, SeededEpisodesAreDeterministic) {
  auto a = adversarial_obstacle(7);
  auto b = adversarial_obstacle(7);
  std::ostringstream ta, tb;
  write_trace(ta, run_episode(planner(), *a));
  write_trace(tb, run_episode(planner(), *b));
  EXPECT_EQ(ta.str(), tb.str());
}

TEST(Simulation, EveryTurnTakesFourSteps) {
  auto model = random_obstacle(5);
  const SimulationTrace t = run_episode(planner(), *model);
  expect_accepted(t, "random 5");
  int run = 0, turns = 0;
  for (const KeyframeRecord& k : t.keyframes) {
    if (k.action.steering()) {
      ++run;
      continue;
    }
    if (run > 0) {
      EXPECT_EQ(run, 4);
      ++turns;
    }
    run = 0;
  }
  EXPECT_GT(turns, 0);
}

// Ring corridor around a sealed pocket that hides the obstacle for good.
Environment corridor() {
  Environment env = testing::open_field(7, 5);
  env.name = "corridor";
  env.static_obstacles = {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {1, 2}, {5, 2}, {1, 3}, {2, 3}, {3, 3}, {4, 3}, {5, 3}};
  env.goals = {Cell{0, 0}, Cell{6, 4}};
  env.robot_start = {{0, 0}, Heading::kE};
  env.obstacle_start = {3, 2};
  env.visibility_radius = 1;
  env.partitions.assign(2, {});
  for (int i = 0; i < env.cell_count(); ++i) {
    const Cell c = env.cell_at(i);
    env.partitions[c.x >= 2 && c.x <= 4 && c.y == 2 ? 1 : 0].push_back(c);
  }
  return env;
}

TEST(Simulation, CorridorWithoutObstacleMakesMonotoneProgress) {
  const auto p = std::make_shared<const Planner>(corridor());
  auto model = scripted_obstacle({});
  const SimulationTrace t = run_episode(p, *model);
  expect_accepted(t, "corridor");
  int corners = 0;
  Heading h = corridor().robot_start.heading;
  for (const TickRecord& r : t.ticks) {
    EXPECT_TRUE(r.moved) << r.tick;
    EXPECT_FALSE(r.belief.is_exact());
    corners += r.heading != h;
    h = r.heading;
  }
  int run = 0, turns = 0;
  for (const KeyframeRecord& k : t.keyframes) {
    if (k.action.steering()) {
      ++run;
      continue;
    }
    if (run > 0) {
      EXPECT_EQ(run, 4);
      ++turns;
    }
    run = 0;
  }
  EXPECT_EQ(turns, corners);
  EXPECT_GE(turns, 4);
}

TEST(Simulation, KeyframesRestBetweenTicksAndStayInCell) {
  auto model = random_obstacle(3);
  const SimulationTrace t = run_episode(planner(), *model);
  ASSERT_FALSE(t.ticks.empty());
  for (const TickRecord& r : t.ticks) {
    std::vector<const KeyframeRecord*> ks;
    for (const KeyframeRecord& k : t.keyframes) {
      if (k.tick == r.tick) ks.push_back(&k);
    }
    EXPECT_EQ(r.moved, !ks.empty());
    if (ks.empty()) continue;
    EXPECT_EQ(ks.back()->cell, r.robot);
    EXPECT_EQ(ks.back()->apex.v_apex, 0.0);
    for (const KeyframeRecord* k : ks) EXPECT_TRUE(k->cell == r.robot || k->cell == r.observer);
  }
}

TEST(Simulation, RejectsMovesBreakingTheAssumptions) {
  Episode ep(planner(), {}, "remote");
  const Cell o = ep.obstacle();
  EXPECT_TRUE(ep.reject_reason({o.x - 2, o.y}).has_value());
  EXPECT_THROW(ep.advance({o.x - 2, o.y}), DomainError);
  EXPECT_TRUE(ep.reject_reason({o.x, o.y + 1}).has_value());  // off the map
  EXPECT_FALSE(ep.reject_reason(o).has_value());
  for (const Cell& c : ep.legal_moves()) EXPECT_FALSE(ep.reject_reason(c).has_value());
  EXPECT_EQ(ep.legal_moves().front(), o);
  EXPECT_EQ(ep.tick(), 0);
}

TEST(Simulation, StoppedRobotCellIsRejected) {
  Environment env = testing::open_field(4, 4);
  env.visibility_radius = 10;
  env.obstacle_start = {1, 0};
  Episode ep(std::make_shared<const Planner>(env), {}, "remote");
  ASSERT_FALSE(ep.state().moved);
  const Cell robot = ep.state().robot;
  ASSERT_TRUE(ep.reject_reason(robot).has_value());
  EXPECT_THROW(ep.advance(robot), DomainError);
  for (const Cell& c : ep.legal_moves()) EXPECT_FALSE(c == robot);
}

TEST(Simulation, StallingObstacleLosesTheEnvironmentGame) {
  // The obstacle chases the robot without ever retreating.
  auto chase = remote_obstacle([](const ObstacleView& v) {
    Cell best = v.legal.front();
    auto dist = [&](Cell c) { return std::abs(c.x - v.robot.x) + std::abs(c.y - v.robot.y); };
    for (const Cell& c : v.legal) {
      if (dist(c) < dist(best)) best = c;
    }
    return best;
  });
  EpisodeConfig config;
  config.max_ticks = 400;
  const SimulationTrace t = run_episode(planner(), *chase, config);
  EXPECT_EQ(t.outcome.collisions, 0);
  EXPECT_EQ(t.outcome.belief_failures, 0);
  EXPECT_TRUE(t.outcome.env_loss);
}

// A parked obstacle next to the second goal never leaves the robot's way: the
// robot waits instead of colliding.
TEST(Simulation, ParkedObstacleBreaksTheAssumption) {
  auto parked = scripted_obstacle({});
  EpisodeConfig config;
  config.max_ticks = 300;
  const SimulationTrace t = run_episode(planner(), *parked, config);
  EXPECT_EQ(t.outcome.collisions, 0);
  EXPECT_TRUE(t.outcome.aborted.empty());
  EXPECT_TRUE(t.outcome.env_loss);
  EXPECT_EQ(t.outcome.goal_visits[1], 0);
}

TEST(Simulation, TraceFormat) {
  auto model = random_obstacle(1);
  EpisodeConfig config;
  config.max_ticks = 30;
  config.record_trajectories = true;
  const SimulationTrace t = run_episode(planner(), *model, config);
  EXPECT_FALSE(t.steps.empty());
  std::ostringstream out;
  write_trace(out, t);
  std::istringstream in(out.str());
  std::string line;
  int ticks = 0, keyframes = 0, outcomes = 0;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(nlohmann::json::parse(line)["schema"], "safenav-trace/1");
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string type = j["type"];
    ticks += type == "tick";
    keyframes += type == "keyframe";
    outcomes += type == "outcome";
  }
  EXPECT_EQ(ticks, static_cast<int>(t.ticks.size()));
  EXPECT_EQ(keyframes, static_cast<int>(t.keyframes.size()));
  EXPECT_GT(keyframes, 0);
  EXPECT_EQ(outcomes, 1);

  std::ostringstream beliefs;
  write_belief_trace(beliefs, t, planner()->env());
  EXPECT_EQ(beliefs.str().rfind("tick 0 robot ", 0), 0u);
}

TEST(Simulation, ThroughputForAcceptanceRuns) {
  const auto start = std::chrono::steady_clock::now();
  int ticks = 0;
  for (unsigned seed = 100; seed < 150; ++seed) {
    auto model = seed % 2 ? adversarial_obstacle(seed) : random_obstacle(seed);
    ticks += run_episode(planner(), *model).outcome.ticks;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "50 episodes, " << ticks << " ticks, " << s << " s\n";
  EXPECT_LT(s * 20, 600.0);
}

}  // namespace
}  // namespace safenav
