#include "safenav/simulation.h"

#include <algorithm>
#include <cstdlib>
#include <unordered_set>
#include <ostream>

#include "json_io.h"
#include "safenav/errors.h"

namespace safenav {
namespace {

constexpr Heading kDirs[] = {Heading::kN, Heading::kE, Heading::kS, Heading::kW};

int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

std::vector<BeliefState> options_at(const NavigationGame& ng, int s) {
  std::vector<BeliefState> out;
  for (int o = ng.game.env_begin[static_cast<std::size_t>(s)]; o < ng.game.env_begin[static_cast<std::size_t>(s) + 1];
       ++o) {
    out.push_back(ng.option_belief[static_cast<std::size_t>(o)]);
  }
  return out;
}

// Legal cells from which the environment goal is reached before the stall
// bound runs out.
std::vector<Cell> within_budget(const ObstacleView& v) {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < v.legal.size(); ++i) {
    if (v.retreat_steps[i] >= 0) out.push_back(v.legal[i]);
  }
  return out.empty() ? v.legal : out;
}

class Scripted final : public ObstacleModel {
 public:
  explicit Scripted(std::vector<Cell> path) : path_(std::move(path)) {}
  std::string name() const override { return "scripted"; }
  Cell choose(const ObstacleView& v) override {
    if (v.legal.empty()) return v.obstacle;
    const std::size_t t = static_cast<std::size_t>(v.tick);
    const Cell want = t < path_.size() ? path_[t] : (path_.empty() ? v.obstacle : path_.back());
    if (std::find(v.legal.begin(), v.legal.end(), want) != v.legal.end()) return want;
    if (std::find(v.legal.begin(), v.legal.end(), v.obstacle) != v.legal.end()) return v.obstacle;
    return v.legal.front();
  }

 private:
  std::vector<Cell> path_;
};

class RandomLegal final : public ObstacleModel {
 public:
  explicit RandomLegal(unsigned seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  Cell choose(const ObstacleView& v) override {
    const std::vector<Cell> ok = within_budget(v);
    return ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng_)];
  }

 private:
  std::mt19937 rng_;
};

class Adversarial final : public ObstacleModel {
 public:
  explicit Adversarial(unsigned seed) : rng_(seed) {}
  std::string name() const override { return "adversarial"; }
  Cell choose(const ObstacleView& v) override {
    std::vector<Cell> best;
    int best_rank = -1;
    for (const Cell& c : within_budget(v)) {
      const int r = v.robot_rank_after(c);
      if (r > best_rank) {
        best_rank = r;
        best.clear();
      }
      if (r == best_rank) best.push_back(c);
    }
    return best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng_)];
  }

 private:
  std::mt19937 rng_;
};

class Remote final : public ObstacleModel {
 public:
  explicit Remote(std::function<Cell(const ObstacleView&)> f) : f_(std::move(f)) {}
  std::string name() const override { return "remote"; }
  Cell choose(const ObstacleView& v) override { return f_(v); }

 private:
  std::function<Cell(const ObstacleView&)> f_;
};

}  // namespace

std::unique_ptr<ObstacleModel> scripted_obstacle(std::vector<Cell> path) {
  return std::make_unique<Scripted>(std::move(path));
}
std::unique_ptr<ObstacleModel> random_obstacle(unsigned seed) { return std::make_unique<RandomLegal>(seed); }
std::unique_ptr<ObstacleModel> adversarial_obstacle(unsigned seed) { return std::make_unique<Adversarial>(seed); }
std::unique_ptr<ObstacleModel> remote_obstacle(std::function<Cell(const ObstacleView&)> choose) {
  return std::make_unique<Remote>(std::move(choose));
}

// ---------------------------------------------------------------------------
// Planner

Planner::Planner(const Environment& env, const PolicyConfig& config, bool belief)
    : env_(env),
      config_(config),
      kernel_(config, step_vocabulary(env)),
      nav_(belief ? build_belief_game(env) : encode_navigation_game(env)),
      result_(solve_gr1(nav_.game, nav_.spec)),
      actions_(env) {
  if (!result_.realizable) throw GameBuildError("navigation game for " + env.name + " is unrealizable");
  if (!kernel_.launch_ok()) throw GameBuildError("viability kernel cannot launch from rest");
}

const ActionPlan& Planner::action_plan(Cell from, Heading heading_in, Heading exit) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return actions_.plan(from, heading_in, exit);
}

const MovePlan& Planner::move_plan(const FineState& fine, Heading heading_in, Heading exit, bool trajectories,
                                   double sample_dt) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  const auto key = std::make_tuple(fine.cell.x, fine.cell.y, static_cast<int>(heading_in), static_cast<int>(exit),
                                   fine.heading, trajectories);
  if (auto it = moves_.find(key); it != moves_.end()) return it->second;
  MovePlan mp;
  const ActionPlan& plan = actions_.plan(env_.coarse_of(fine.cell), heading_in, exit);
  const int start = plan.game->index_of({fine, Phase::kRest, 0});
  std::vector<std::pair<Action, ActionState>> steps;
  if (start < 0) {
    mp.failure = "rest state outside the action game";
  } else {
    try {
      steps = play(plan, start);
    } catch (const PolicyGap& e) {
      mp.failure = e.what();
    }
  }
  ApexState apex{0.0, config_.pendulum.h_apex};
  double dy2 = 0.0;
  Phase phase = Phase::kRest;
  FineState at = fine;
  for (const auto& [a, st] : steps) {
    if (fine_step_target(at, a, env_).state.cell != st.fine.cell) {
      mp.failure = "action game and fine stepping disagree";
      break;
    }
    if (phase == Phase::kRest) dy2 = rest_offset(a.i_st, config_);
    KeyframeRecord k;
    k.cell = env_.coarse_of(st.fine.cell);
    k.fine = st.fine;
    k.action = a;
    k.phase = phase;
    try {
      k.apex = keyframe_policy(apex, dy2, a, config_, {phase, &kernel_});
    } catch (const PolicyGap& e) {
      mp.failure = e.what();
      break;
    }
    const TransitionSample t = evaluate_transition(apex, dy2, a, k.apex, config_);
    k.delta_y1 = t.delta_y1_n;
    k.delta_y2 = t.delta_y2_n;
    k.viable = t.viable;
    k.margin = transition_safety(apex, dy2, a, k.apex, config_).margin;
    if (trajectories && t.viable) mp.steps.push_back(plan_step(apex, dy2, a, k.apex, config_, sample_dt));
    mp.keyframes.push_back(k);
    if (!t.viable) {
      mp.failure = "non-viable keyframe transition";
      break;
    }
    apex = k.apex;
    dy2 = t.delta_y2_n;
    phase = next_phase(phase, a);
    at = st.fine;
  }
  return moves_.emplace(key, std::move(mp)).first->second;
}

// ---------------------------------------------------------------------------
// Episode

Episode::Episode(std::shared_ptr<const Planner> planner, EpisodeConfig config, std::string obstacle_model)
    : planner_(std::move(planner)), config_(config) {
  const Environment& env = planner_->env();
  trace_.env_name = env.name;
  trace_.obstacle_model = std::move(obstacle_model);
  state_ = planner_->nav().game.initial;
  memory_ = planner_->strategy().initial_memory;
  obstacle_ = env.obstacle_start;
  trace_.start_robot = state().robot;
  trace_.start_belief = state().belief;
  fine_ = {staging_cell(env.robot_start.cell, env.robot_start.heading, kStagingAlong[0], kStagingLateral[0], env),
           fine_heading(env.robot_start.heading), Stance::kBoth};
  if (obstacle_ == env.robot_start.cell) ++trace_.outcome.collisions;
  finish_outcome();
}

const NavState& Episode::state() const { return planner_->nav().states[static_cast<std::size_t>(state_)]; }

bool Episode::finished() const {
  const Outcome& o = trace_.outcome;
  if (!o.aborted.empty() || tick_ >= config_.max_ticks) return true;
  return o.goal_visits[0] >= config_.goal_rounds && o.goal_visits[1] >= config_.goal_rounds;
}

std::vector<Cell> Episode::legal_moves() const {
  std::vector<Cell> out;
  std::vector<Cell> candidates = {obstacle_};
  for (Heading h : kDirs) candidates.push_back(step(obstacle_, h));
  for (const Cell& c : candidates) {
    if (!reject_reason(c)) out.push_back(c);
  }
  return out;
}

std::optional<std::string> Episode::reject_reason(Cell move) const {
  const Environment& env = planner_->env();
  const NavState& s = state();
  if (manhattan(move, obstacle_) > 1) return "the obstacle moves at most one cell per tick";
  if (!env.obstacle_allowed(move)) return "the obstacle moves on open level floor only";
  if (!s.moved && move == s.robot) return "the obstacle may not enter the cell of a stopped robot";
  return std::nullopt;
}

std::optional<std::pair<int, int>> Episode::successor(int s, int m, Cell move) const {
  const NavigationGame& ng = planner_->nav();
  const Strategy& st = planner_->strategy();
  try {
    const BeliefState b = observe(options_at(ng, s), move, ng.states[static_cast<std::size_t>(s)].robot, ng.env, ng.vis);
    const auto e = st.edge(m, ng.option_for(s, b));
    if (!e) return std::nullopt;
    return std::make_pair(ng.game.sys_target[static_cast<std::size_t>(*e)], st.next_memory(ng.spec, s, m));
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

int Episode::rank_after(Cell move) const {
  const auto next = successor(state_, memory_, move);
  if (!next) return kNoRank;
  return planner_->strategy().rank[static_cast<std::size_t>(next->second)][static_cast<std::size_t>(next->first)];
}

int Episode::ticks_to_env_goal(Cell move, int budget) const {
  const NavigationGame& ng = planner_->nav();
  const Environment& env = ng.env;
  auto goal = [&](int s) { return ng.spec.env_liveness.empty() || ng.spec.env_liveness[0].test(s); };
  struct Config {
    int s, m;
    Cell o;
  };
  const auto first = successor(state_, memory_, move);
  if (!first) return -1;
  if (goal(first->first)) return 0;
  std::vector<Config> layer = {{first->first, first->second, move}};
  std::unordered_set<long long> seen;
  auto key = [&](const Config& c) {
    return (static_cast<long long>(c.s) * 2 + c.m) * env.cell_count() + env.cell_index(c.o);
  };
  seen.insert(key(layer.front()));
  // The robot's strategy is deterministic, so only the obstacle branches.
  for (int depth = 1; depth <= budget && !layer.empty(); ++depth) {
    std::vector<Config> next_layer;
    for (const Config& c : layer) {
      const NavState& ns = ng.states[static_cast<std::size_t>(c.s)];
      std::vector<Cell> moves = {c.o};
      for (Heading h : kDirs) moves.push_back(step(c.o, h));
      for (const Cell& o : moves) {
        if (!env.obstacle_allowed(o) || (!ns.moved && o == ns.robot)) continue;
        const auto n = successor(c.s, c.m, o);
        if (!n) continue;
        if (goal(n->first)) return depth;
        const Config nc{n->first, n->second, o};
        if (seen.insert(key(nc)).second) next_layer.push_back(nc);
      }
    }
    layer = std::move(next_layer);
  }
  return -1;
}

ObstacleView Episode::view() const {
  const NavState& s = state();
  ObstacleView v;
  v.tick = tick_;
  v.obstacle = obstacle_;
  v.robot = s.robot;
  v.robot_stopped = !s.moved;
  v.legal = legal_moves();
  v.stall = stall_;
  v.stall_bound = config_.stall_bound;
  v.robot_rank_after = [this](Cell c) { return rank_after(c); };
  for (const Cell& c : v.legal) v.retreat_steps.push_back(ticks_to_env_goal(c, config_.stall_bound - stall_));
  return v;
}

void Episode::advance(Cell move) {
  if (auto reason = reject_reason(move)) throw DomainError(*reason);
  if (finished()) throw DomainError("the episode is over");
  const NavigationGame& ng = planner_->nav();
  const Strategy& st = planner_->strategy();
  const NavState s = state();
  last_keyframe_begin_ = trace_.keyframes.size();
  last_step_begin_ = trace_.steps.size();
  Outcome& out = trace_.outcome;

  TickRecord rec;
  rec.tick = tick_;
  rec.observer = s.robot;
  rec.obstacle = move;
  BeliefState b;
  try {
    b = observe(options_at(ng, state_), move, s.robot, ng.env, ng.vis);
  } catch (const DomainError&) {
    ++out.belief_failures;
    out.aborted = "belief lost the obstacle at tick " + std::to_string(tick_);
    finish_outcome();
    return;
  }
  rec.belief = b;
  rec.belief_sound = belief_contains(b, move, s.robot, ng.env, ng.vis);
  if (!rec.belief_sound) ++out.belief_failures;

  const auto e = st.edge(memory_, ng.option_for(state_, b));
  if (!e) {
    out.aborted = "navigation strategy undefined at " + ng.game.state_name(state_);
    finish_outcome();
    return;
  }
  const int next = ng.game.sys_target[static_cast<std::size_t>(*e)];
  const auto action = ng.action_of(*e);

  if (ng.spec.sys_liveness[static_cast<std::size_t>(memory_)].test(state_)) {
    ++out.goal_visits[static_cast<std::size_t>(memory_)];
    out.max_goal_gap = std::max(out.max_goal_gap, since_goal_);
    since_goal_ = 0;
  }
  memory_ = st.next_memory(ng.spec, state_, memory_);

  if (action) {
    const MovePlan& mp =
        planner_->move_plan(fine_, s.heading, *action, config_.record_trajectories, config_.sample_dt);
    for (KeyframeRecord k : mp.keyframes) {
      k.tick = tick_;
      if (!k.viable) ++out.safety_violations;
      trace_.keyframes.push_back(k);
    }
    trace_.steps.insert(trace_.steps.end(), mp.steps.begin(), mp.steps.end());
    if (!mp.failure.empty()) {
      out.aborted = "move " + std::string(to_string(*action)) + " from " + ng.game.state_name(state_) + ": " +
                    mp.failure;
    } else {
      fine_ = mp.keyframes.back().fine;
    }
  }
  rec.collision = move == s.robot || (action && move == step(s.robot, *action));
  if (rec.collision) ++out.collisions;

  state_ = next;
  const NavState& now = state();
  if (ng.spec.env_liveness.empty() || ng.spec.env_liveness[0].test(state_)) {
    stall_ = 0;
  } else {
    ++stall_;
  }
  if (stall_ > config_.stall_bound) out.env_loss = true;
  out.max_env_gap = std::max(out.max_env_gap, stall_ + 1);

  rec.nav_state = state_;
  rec.memory = memory_;
  rec.robot = now.robot;
  rec.heading = now.heading;
  rec.moved = action.has_value();
  rec.stall = stall_;
  trace_.ticks.push_back(rec);
  obstacle_ = move;
  ++tick_;
  ++since_goal_;
  finish_outcome();
}

void Episode::finish_outcome() {
  Outcome& out = trace_.outcome;
  out.ticks = tick_;
  const int env_goals = planner_->nav().spec.env_liveness.empty() ? 0 : 1;
  out.liveness_bound = liveness_bound(planner_->strategy(), std::max(1, env_goals), std::max(1, out.max_env_gap));
}

SimulationTrace run_episode(std::shared_ptr<const Planner> planner, ObstacleModel& obstacle,
                            const EpisodeConfig& config) {
  Episode ep(std::move(planner), config, obstacle.name());
  while (!ep.finished()) {
    const Cell move = obstacle.choose(ep.view());
    if (auto reason = ep.reject_reason(move)) {
      SimulationTrace t = ep.trace();
      t.outcome.aborted = "obstacle model broke its assumptions: " + *reason;
      return t;
    }
    ep.advance(move);
  }
  return ep.trace();
}

// ---------------------------------------------------------------------------
// Trace output

void write_trace(std::ostream& out, const SimulationTrace& trace) {
  out << json{{"schema", "safenav-trace/1"}, {"env", trace.env_name}, {"obstacle", trace.obstacle_model}}.dump()
      << "\n";
  std::size_t k = 0;
  for (const TickRecord& t : trace.ticks) {
    out << json{{"type", "tick"},
                {"tick", t.tick},
                {"robot", cell_json(t.robot)},
                {"heading", to_string(t.heading)},
                {"action", t.moved ? "move" : "stop"},
                {"observer", cell_json(t.observer)},
                {"obstacle", cell_json(t.obstacle)},
                {"belief", belief_json(t.belief)},
                {"belief_sound", t.belief_sound},
                {"collision", t.collision},
                {"memory", t.memory},
                {"stall", t.stall}}
               .dump()
        << "\n";
    while (k < trace.keyframes.size() && trace.keyframes[k].tick == t.tick) {
      json j = keyframe_json(trace.keyframes[k++]);
      j["obstacle"] = cell_json(t.obstacle);
      j["belief"] = belief_json(t.belief);
      out << j.dump() << "\n";
    }
  }
  out << outcome_json(trace.outcome).dump() << "\n";
}

void write_belief_trace(std::ostream& out, const SimulationTrace& trace, const Environment& env) {
  const VisibilityTable vis(env);
  out << belief_trace_line(0, trace.start_robot, trace.start_belief, trace.start_robot, env, vis) << "\n";
  for (const TickRecord& t : trace.ticks) {
    out << belief_trace_line(t.tick + 1, t.robot, t.belief, t.observer, env, vis) << "\n";
  }
}

}  // namespace safenav
