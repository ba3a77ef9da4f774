#include "safenav/navigation.h"

#include <cstdlib>
#include <deque>
#include <memory>
#include <sstream>

#include "safenav/errors.h"

namespace safenav {
namespace {

constexpr Heading kDirs[] = {Heading::kN, Heading::kE, Heading::kS, Heading::kW};

std::uint64_t key(const NavState& s, const Environment& env) {
  const std::uint64_t belief = s.belief.is_exact()
                                   ? static_cast<std::uint64_t>(env.cell_index(s.belief.cell))
                                   : (std::uint64_t{1} << 32) | s.belief.partitions;
  return static_cast<std::uint64_t>(env.cell_index(s.robot)) << 36 | belief << 3 |
         static_cast<std::uint64_t>(s.heading) << 1 | (s.moved ? 1u : 0u);
}

bool far_or_hidden(const NavState& s) {
  if (!s.belief.is_exact()) return true;
  return std::abs(s.belief.cell.x - s.robot.x) + std::abs(s.belief.cell.y - s.robot.y) >= 3;
}

}  // namespace

std::string to_string(const NavState& s) {
  std::ostringstream out;
  out << "r=(" << s.robot.x << "," << s.robot.y << ") b=" << to_string(s.belief)
      << " h=" << to_string(s.heading) << " a=" << (s.moved ? "move" : "stop");
  return out.str();
}

int NavigationGame::index_of(const NavState& s) const {
  const auto it = index.find(key(s, env));
  return it == index.end() ? -1 : it->second;
}

int NavigationGame::option_for(int s, const BeliefState& b) const {
  for (int o = game.env_begin[static_cast<std::size_t>(s)]; o < game.env_begin[static_cast<std::size_t>(s) + 1];
       ++o) {
    if (option_belief[static_cast<std::size_t>(o)] == b) return o;
  }
  return -1;
}

std::optional<Heading> NavigationGame::action_of(int e) const {
  const int a = edge_action[static_cast<std::size_t>(e)];
  if (a < 0) return std::nullopt;
  return static_cast<Heading>(a);
}

bool nav_state_safe(const NavState& s, const Environment& env, const VisibilityTable& vis) {
  const Cell observer = s.observer();
  for (const Cell& c : belief_cells(s.belief, observer, env, vis)) {
    if (c == s.robot || c == observer) return false;
    if (s.moved && std::abs(c.x - s.robot.x) + std::abs(c.y - s.robot.y) == 1) return false;
  }
  return true;
}

std::vector<std::optional<Heading>> robot_actions(const NavState& s, const Environment& env) {
  std::vector<std::optional<Heading>> out = {std::nullopt};
  for (Heading h : kDirs) {
    if (h == reverse(s.heading)) continue;
    if (coarse_move_allowed(s.robot, h, env)) out.push_back(h);
  }
  return out;
}

NavigationGame build_navigation_game(const Environment& env, const VisibilityTable& vis,
                                     bool env_liveness) {
  NavigationGame ng;
  ng.env = env;
  ng.vis = vis;
  if (!env.free(env.robot_start.cell)) throw GameBuildError("robot starts on an obstacle");
  if (!env.obstacle_allowed(env.obstacle_start)) throw GameBuildError("obstacle starts off level floor");

  auto intern = [&](const NavState& s) {
    const auto [it, fresh] = ng.index.emplace(key(s, env), static_cast<int>(ng.states.size()));
    if (fresh) ng.states.push_back(s);
    return it->second;
  };
  intern({env.robot_start.cell, initial_belief(env, vis), env.robot_start.heading, false});

  GameBuilder builder;
  std::vector<std::uint8_t> safe;
  for (std::size_t i = 0; i < ng.states.size(); ++i) {
    const NavState s = ng.states[i];
    builder.open_state();
    safe.push_back(nav_state_safe(s, env, vis));
    if (!safe.back()) {
      builder.open_option();
      ng.option_belief.push_back(s.belief);
      builder.add_move(static_cast<int>(i));
      ng.edge_action.push_back(-1);
      continue;
    }
    const auto beliefs = belief_successor(s.belief, {s.robot, s.observer(), !s.moved}, env, vis);
    const auto actions = robot_actions(s, env);
    for (const BeliefState& b : beliefs) {
      builder.open_option();
      ng.option_belief.push_back(b);
      for (const auto& a : actions) {
        const NavState next = a ? NavState{step(s.robot, *a), b, *a, true} : NavState{s.robot, b, s.heading, false};
        builder.add_move(intern(next));
        ng.edge_action.push_back(a ? static_cast<std::int8_t>(*a) : std::int8_t{-1});
      }
    }
  }
  ng.game = builder.finish(0);
  const auto names = std::make_shared<std::vector<NavState>>(ng.states);
  ng.game.describe_state = [names](int s) { return to_string((*names)[static_cast<std::size_t>(s)]); };

  const int n = ng.game.num_states;
  ng.spec.sys_safe = Bitset(n);
  Bitset live(n);
  std::vector<Bitset> goals(2, Bitset(n));
  for (int s = 0; s < n; ++s) {
    const NavState& st = ng.states[static_cast<std::size_t>(s)];
    if (safe[static_cast<std::size_t>(s)]) ng.spec.sys_safe.set(s);
    if (far_or_hidden(st)) live.set(s);
    for (std::size_t g = 0; g < 2; ++g) {
      if (st.robot == env.goals[g]) goals[g].set(s);
    }
  }
  if (env_liveness) ng.spec.env_liveness = {live};
  ng.spec.sys_liveness = goals;
  ng.spec.sys_liveness_names = {"GT1", "GT2"};
  return ng;
}

NavigationGame encode_navigation_game(const Environment& env, bool env_liveness) {
  return build_navigation_game(env, VisibilityTable(env, true), env_liveness);
}

NavigationGame build_belief_game(const Environment& env, bool env_liveness) {
  return build_navigation_game(env, VisibilityTable(env), env_liveness);
}

}  // namespace safenav
