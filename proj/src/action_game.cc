#include "safenav/action_game.h"

#include <cmath>
#include <sstream>

#include "safenav/errors.h"

namespace safenav {
namespace {

std::uint64_t key(const ActionState& s) {
  return static_cast<std::uint64_t>(s.fine.cell.x) << 32 | static_cast<std::uint64_t>(s.fine.cell.y) << 16 |
         static_cast<std::uint64_t>(s.fine.heading) << 8 | static_cast<std::uint64_t>(s.fine.stance) << 5 |
         static_cast<std::uint64_t>(s.phase) << 2 | (s.turn_dir > 0 ? 1u : 0u) << 1 | (s.turn_dir != 0 ? 1u : 0u);
}

Action make(double d, double dtheta, Stance st, bool stop) {
  Action a;
  a.d = d;
  a.delta_theta = dtheta;
  a.i_st = st;
  a.c_stop = stop;
  return a;
}

// Candidate footsteps in a phase, before terrain checks.
std::vector<Action> candidates(const ActionState& s, const StepVocabulary& vocab) {
  std::vector<Action> out;
  const Stance st = s.fine.stance;
  switch (s.phase) {
    case Phase::kRest:
      for (Stance foot : {Stance::kLeft, Stance::kRight}) {
        for (double d : vocab.straight_d) out.push_back(make(d, 0.0, foot, false));
      }
      break;
    case Phase::kWalk:
      for (double d : vocab.straight_d) out.push_back(make(d, 0.0, st, false));
      for (double d : vocab.straight_d) out.push_back(make(d, 0.0, st, true));
      for (double dir : {1.0, -1.0}) {
        if (turn_is_opposite(st, dir)) out.push_back(make(vocab.turn_d_opposite[0], dir * kTurnAngle, st, false));
      }
      break;
    case Phase::kTurn1:
    case Phase::kTurn2:
    case Phase::kTurn3: {
      const std::size_t k = static_cast<std::size_t>(s.phase) - static_cast<std::size_t>(Phase::kTurn1) + 1;
      const double dtheta = s.turn_dir * kTurnAngle;
      const double d = turn_is_opposite(st, dtheta) ? vocab.turn_d_opposite[k] : vocab.turn_d_matching[k];
      out.push_back(make(d, dtheta, st, false));
      break;
    }
    case Phase::kRamp1:
      for (double d : vocab.straight_d) out.push_back(make(d, 0.0, st, true));
      break;
  }
  return out;
}

// Along-offset from the entry edge and lateral index of f inside cell c.
std::pair<int, int> local(FineCell f, Cell c, Heading heading, const Environment& env) {
  const int fx = f.x - c.x * env.fine;
  const int fy = f.y - c.y * env.fine;
  const int last = env.fine - 1;
  switch (heading) {
    case Heading::kE: return {fx, fy};
    case Heading::kW: return {last - fx, fy};
    case Heading::kN: return {fy, fx};
    case Heading::kS: return {last - fy, fx};
  }
  return {fx, fy};
}

}  // namespace

std::string to_string(const ActionState& s) {
  std::ostringstream out;
  out << "f=(" << s.fine.cell.x << "," << s.fine.cell.y << ") h=" << s.fine.heading
      << " st=" << to_string(s.fine.stance) << " " << to_string(s.phase);
  if (s.turn_dir != 0) out << (s.turn_dir > 0 ? "+" : "-");
  return out.str();
}

FineCell staging_cell(Cell c, Heading heading, int along, int lateral, const Environment& env) {
  const int last = env.fine - 1;
  const int x0 = c.x * env.fine, y0 = c.y * env.fine;
  switch (heading) {
    case Heading::kE: return {x0 + along, y0 + lateral};
    case Heading::kW: return {x0 + last - along, y0 + lateral};
    case Heading::kN: return {x0 + lateral, y0 + along};
    case Heading::kS: return {x0 + lateral, y0 + last - along};
  }
  return {x0, y0};
}

std::vector<FineCell> staging_zone(Cell c, Heading heading, const Environment& env) {
  std::vector<FineCell> out;
  for (int a : kStagingAlong) {
    for (int l : kStagingLateral) out.push_back(staging_cell(c, heading, a, l, env));
  }
  return out;
}

bool in_staging_zone(FineCell f, Cell c, Heading heading, const Environment& env) {
  if (!(env.coarse_of(f) == c)) return false;
  const auto [a, l] = local(f, c, heading, env);
  bool along = false, lateral = false;
  for (int v : kStagingAlong) along |= v == a;
  for (int v : kStagingLateral) lateral |= v == l;
  return along && lateral;
}

int ActionGame::index_of(const ActionState& s) const {
  const auto it = index.find(key(s));
  return it == index.end() ? -1 : it->second;
}

ActionGame encode_action_game(const Environment& env, Cell from, Heading heading_in, Heading exit) {
  if (exit == reverse(heading_in)) throw DomainError("an action game cannot reverse");
  if (!env.free(from)) throw DomainError("action game starts in a blocked cell");
  ActionGame ag;
  ag.from = from;
  ag.heading_in = heading_in;
  ag.exit = exit;
  const Cell to = step(from, exit);
  const bool open = coarse_move_allowed(from, exit, env);
  const StepVocabulary vocab = step_vocabulary(env);

  auto intern = [&](const ActionState& s) {
    const auto [it, fresh] = ag.index.emplace(key(s), static_cast<int>(ag.states.size()));
    if (fresh) ag.states.push_back(s);
    return it->second;
  };
  for (const FineCell& f : staging_zone(from, heading_in, env)) {
    ag.starts.push_back(intern({{f, fine_heading(heading_in), Stance::kBoth}, Phase::kRest, 0}));
  }

  auto goal = [&](const ActionState& s) {
    return open && s.phase == Phase::kRest && s.fine.heading == fine_heading(exit) &&
           in_staging_zone(s.fine.cell, to, exit, env);
  };

  GameBuilder builder;
  std::vector<std::uint8_t> goals;
  for (std::size_t i = 0; i < ag.states.size(); ++i) {
    const ActionState s = ag.states[i];
    builder.open_state();
    builder.open_option();
    goals.push_back(goal(s));
    std::size_t moves = 0;
    if (!goals.back()) {
      for (Action a : candidates(s, vocab)) {
        FineStep fs;
        try {
          fs = fine_step_target(s.fine, a, env);
        } catch (const IllegalFineMove&) {
          continue;
        }
        const Cell c = env.coarse_of(fs.state.cell);
        if (!(c == from) && !(open && c == to)) continue;
        // Turns and stops stay on level ground.
        if (fs.delta_z != StepHeight::kFlat && (a.steering() || a.c_stop)) continue;
        a.delta_z_foot = fs.delta_z;
        ActionState next{fs.state, next_phase(s.phase, a), s.turn_dir};
        if (s.phase == Phase::kWalk && a.steering()) next.turn_dir = a.delta_theta > 0 ? 1 : -1;
        if (next.phase == Phase::kWalk || next.phase == Phase::kRest) next.turn_dir = 0;
        if (next.phase == Phase::kRest) next.fine.stance = Stance::kBoth;
        builder.add_move(intern(next));
        ag.edge_action.push_back(a);
        ++moves;
      }
    }
    if (moves == 0) {
      // Goal states and dead ends wait in place.
      builder.add_move(static_cast<int>(i));
      ag.edge_action.push_back(make(0.0, 0.0, Stance::kBoth, true));
    }
  }
  ag.game = builder.finish(ag.starts.front());
  const auto names = std::make_shared<std::vector<ActionState>>(ag.states);
  ag.game.describe_state = [names](int s) { return to_string((*names)[static_cast<std::size_t>(s)]); };
  Bitset done(ag.game.num_states);
  for (int s = 0; s < ag.game.num_states; ++s) {
    if (goals[static_cast<std::size_t>(s)]) done.set(s);
  }
  ag.spec.sys_liveness = {done};
  ag.spec.sys_liveness_names = {"rest at exit"};
  return ag;
}

bool ActionPlan::covers_staging() const {
  for (int s : game->starts) {
    if (!result.strategy.winning.test(s)) return false;
  }
  return true;
}

std::vector<std::pair<Action, ActionState>> play(const ActionPlan& plan, int s) {
  const ActionGame& ag = *plan.game;
  const Strategy& st = plan.result.strategy;
  if (!st.winning.test(s)) throw PolicyGap("action game start " + ag.game.state_name(s) + " is not winning");
  std::vector<std::pair<Action, ActionState>> out;
  while (!ag.done(s)) {
    const auto e = st.edge(0, ag.game.env_begin[static_cast<std::size_t>(s)]);
    if (!e) throw PolicyGap("action strategy undefined at " + ag.game.state_name(s));
    s = ag.game.sys_target[static_cast<std::size_t>(*e)];
    out.emplace_back(ag.edge_action[static_cast<std::size_t>(*e)], ag.states[static_cast<std::size_t>(s)]);
    if (out.size() > 64) throw PolicyGap("action strategy does not terminate");
  }
  return out;
}

const ActionPlan& ActionPlanner::plan(Cell from, Heading heading_in, Heading exit) {
  const auto k = std::make_tuple(env_.cell_index(from), static_cast<int>(heading_in), static_cast<int>(exit));
  auto it = plans_.find(k);
  if (it == plans_.end()) {
    ActionPlan p;
    auto game = std::make_shared<ActionGame>(encode_action_game(env_, from, heading_in, exit));
    p.result = solve_gr1(game->game, game->spec);
    p.game = std::move(game);
    it = plans_.emplace(k, std::move(p)).first;
  }
  return it->second;
}

}  // namespace safenav
