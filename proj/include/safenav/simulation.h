#pragma once

// Closed-loop execution: navigation strategy per tick, action strategy per
// footstep, keyframe policy per keyframe, analytical trajectories per step,
// and a ground-truth obstacle driven by an obstacle model.

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "safenav/action_game.h"
#include "safenav/belief.h"
#include "safenav/keyframe_policy.h"
#include "safenav/navigation.h"

namespace safenav {

struct KeyframeRecord {
  int tick = 0;
  Cell cell;          // coarse cell after the step
  FineState fine;     // fine state after the step
  Action action;
  Phase phase = Phase::kRest;  // phase the step was taken from
  ApexState apex;     // apex state chosen for the step
  double delta_y1 = 0.0;
  double delta_y2 = 0.0;
  double margin = 0.0;
  bool viable = false;
};

// Footsteps of one navigation move with their keyframes, from rest to rest.
struct MovePlan {
  std::vector<KeyframeRecord> keyframes;
  std::vector<StepPlan> steps;  // filled when trajectories are requested
  std::string failure;          // empty when every step is viable
};

// Synthesized strategies and shared configuration. Immutable after
// construction apart from the internal plan caches.
class Planner {
 public:
  // Throws GameBuildError when the navigation game is unrealizable.
  explicit Planner(const Environment& env, const PolicyConfig& config = {}, bool belief = true);

  const Environment& env() const { return env_; }
  const PolicyConfig& config() const { return config_; }
  const ViabilityKernel& kernel() const { return kernel_; }
  const NavigationGame& nav() const { return nav_; }
  const Strategy& strategy() const { return result_.strategy; }

  const ActionPlan& action_plan(Cell from, Heading heading_in, Heading exit) const;
  // Keyframes for the move starting at rest at `fine`.
  const MovePlan& move_plan(const FineState& fine, Heading heading_in, Heading exit,
                            bool trajectories, double sample_dt) const;

 private:
  Environment env_;
  PolicyConfig config_;
  ViabilityKernel kernel_;
  NavigationGame nav_;
  SolveResult result_;
  mutable ActionPlanner actions_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, int, int, int, int, bool>, MovePlan> moves_;
};

// What an obstacle model sees before it moves.
struct ObstacleView {
  int tick = 0;
  Cell obstacle;
  Cell robot;
  bool robot_stopped = true;
  std::vector<Cell> legal;  // stay first, then N, E, S, W
  int stall = 0;            // ticks since the obstacle last left the robot's way
  int stall_bound = 10;
  // Per legal cell: further ticks until the environment goal holds when the
  // obstacle moves there and the robot keeps following its strategy (0 when
  // the next state already satisfies it, -1 beyond the stall budget).
  std::vector<int> retreat_steps;
  // Rank of the robot's strategy after the obstacle moves to a legal cell.
  std::function<int(Cell)> robot_rank_after;
};

class ObstacleModel {
 public:
  virtual ~ObstacleModel() = default;
  virtual std::string name() const = 0;
  virtual Cell choose(const ObstacleView& view) = 0;
};

// Follows `path` (one cell per tick, then stays); illegal entries stay put.
std::unique_ptr<ObstacleModel> scripted_obstacle(std::vector<Cell> path);
// Uniform over the legal moves that keep the stall bound.
std::unique_ptr<ObstacleModel> random_obstacle(unsigned seed);
// Maximizes the robot's strategy rank among moves that keep the stall bound.
std::unique_ptr<ObstacleModel> adversarial_obstacle(unsigned seed);
// Delegates to a callback, for remote players.
std::unique_ptr<ObstacleModel> remote_obstacle(std::function<Cell(const ObstacleView&)> choose);

struct EpisodeConfig {
  int max_ticks = 10000;
  int goal_rounds = 2;  // stop once every goal was visited this often
  int stall_bound = 10;
  bool record_trajectories = false;
  double sample_dt = 0.01;
};

struct TickRecord {
  int tick = 0;
  int nav_state = 0;
  int memory = 0;
  Cell robot;
  Heading heading = Heading::kE;
  bool moved = false;  // action taken this tick
  Cell observer;       // robot cell when the obstacle move was observed
  Cell obstacle;       // ground truth after its move
  BeliefState belief;  // belief after observing the move
  bool belief_sound = true;
  bool collision = false;
  int stall = 0;
};

struct Outcome {
  std::array<int, 2> goal_visits{};
  int ticks = 0;
  int collisions = 0;
  int safety_violations = 0;
  int belief_failures = 0;
  bool env_loss = false;   // the obstacle exceeded the stall bound
  std::string aborted;     // reason when the loop stopped early
  int max_goal_gap = 0;    // ticks between consecutive goal visits
  int max_env_gap = 0;     // ticks between visits to the environment goal
  long long liveness_bound = 0;

  bool accepted() const {
    return aborted.empty() && collisions == 0 && safety_violations == 0 && belief_failures == 0;
  }
};

struct SimulationTrace {
  std::string env_name;
  std::string obstacle_model;
  Cell start_robot;
  BeliefState start_belief;
  std::vector<TickRecord> ticks;
  std::vector<KeyframeRecord> keyframes;
  std::vector<StepPlan> steps;  // with record_trajectories
  Outcome outcome;
};

// Step-by-step episode, driven by run_episode or a remote session.
class Episode {
 public:
  Episode(std::shared_ptr<const Planner> planner, EpisodeConfig config, std::string obstacle_model);

  bool finished() const;
  const SimulationTrace& trace() const { return trace_; }
  const NavState& state() const;
  Cell obstacle() const { return obstacle_; }
  int tick() const { return tick_; }
  int stall() const { return stall_; }
  ObstacleView view() const;
  std::vector<Cell> legal_moves() const;
  // Reason the move breaks the obstacle assumptions, or nullopt.
  std::optional<std::string> reject_reason(Cell move) const;
  // Plays one round; throws DomainError for an illegal move.
  void advance(Cell move);
  // Keyframes appended by the last advance.
  std::size_t keyframes_before_last() const { return last_keyframe_begin_; }
  // Recorded step trajectories appended by the last advance.
  std::size_t steps_before_last() const { return last_step_begin_; }

 private:
  // Navigation state and memory after the obstacle moves to `move` from
  // state s with memory m; nullopt when the strategy is undefined.
  std::optional<std::pair<int, int>> successor(int s, int m, Cell move) const;
  int rank_after(Cell move) const;
  int ticks_to_env_goal(Cell move, int budget) const;
  void finish_outcome();

  std::shared_ptr<const Planner> planner_;
  EpisodeConfig config_;
  SimulationTrace trace_;
  int state_ = 0;
  int memory_ = 0;
  Cell obstacle_;
  FineState fine_;
  int tick_ = 0;
  int stall_ = 0;
  int since_goal_ = 0;
  std::size_t last_keyframe_begin_ = 0;
  std::size_t last_step_begin_ = 0;
};

SimulationTrace run_episode(std::shared_ptr<const Planner> planner, ObstacleModel& obstacle,
                            const EpisodeConfig& config = {});

// Line-delimited JSON records: header, ticks, keyframes, outcome.
void write_trace(std::ostream& out, const SimulationTrace& trace);
// Belief held at the start of every tick: line t is the initial belief for
// t = 0 and the belief after the observation of tick t - 1 otherwise.
void write_belief_trace(std::ostream& out, const SimulationTrace& trace, const Environment& env);

}  // namespace safenav
