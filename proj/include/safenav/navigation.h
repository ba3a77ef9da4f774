#pragma once

// Coarse navigation game over (robot cell, obstacle belief, heading, last
// action). A round: the obstacle steps and is observed from the robot's cell
// (environment option), then the robot stops or moves to a neighbouring cell
// (system move). The belief stored in a state was observed from the cell the
// robot occupied before its last action.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "safenav/belief.h"
#include "safenav/game.h"
#include "safenav/world.h"

namespace safenav {

struct NavState {
  Cell robot;
  BeliefState belief;
  Heading heading = Heading::kE;
  bool moved = false;

  // Cell the belief was observed from.
  Cell observer() const { return moved ? step(robot, reverse(heading)) : robot; }
  friend bool operator==(const NavState&, const NavState&) = default;
};

std::string to_string(const NavState& s);

struct NavigationGame {
  Environment env;
  VisibilityTable vis;
  GameStructure game;
  GR1Spec spec;
  std::vector<NavState> states;
  std::vector<BeliefState> option_belief;  // per environment option
  std::vector<std::int8_t> edge_action;    // per edge: -1 stop, else heading

  int index_of(const NavState& s) const;  // -1 when absent
  // Environment option at state s leading to belief b, or -1.
  int option_for(int s, const BeliefState& b) const;
  // Robot action of edge e: nullopt for stop.
  std::optional<Heading> action_of(int e) const;

  std::unordered_map<std::uint64_t, int> index;
};

// Safety of a navigation state: the robot is outside the belief, the belief
// does not cover the cell the robot left, and a moving robot has no belief
// cell next to it.
bool nav_state_safe(const NavState& s, const Environment& env, const VisibilityTable& vis);

// Robot moves from s: stop first, then N, E, S, W; never back along the
// heading, never into a static obstacle or across a stair the wrong way.
std::vector<std::optional<Heading>> robot_actions(const NavState& s, const Environment& env);

// Game over the given visibility. Environment liveness: the obstacle is
// infinitely often outside the robot's 2-vicinity (Manhattan distance >= 3)
// or out of sight. System liveness: each goal cell infinitely often.
NavigationGame build_navigation_game(const Environment& env, const VisibilityTable& vis,
                                     bool env_liveness = true);

// Fully observable game: the obstacle cell is always known.
NavigationGame encode_navigation_game(const Environment& env, bool env_liveness = true);

// Partially observable game over the environment's partitions.
NavigationGame build_belief_game(const Environment& env, bool env_liveness = true);

}  // namespace safenav
