#pragma once

// Fine action game for one navigation move: the robot rests at a staging
// point of cell `from` facing `heading_in` and must come to rest at a staging
// point of the neighbour in direction `exit`, facing `exit`. Each move is one
// footstep; the environment has no choice. Steps follow the locomotion
// phases: launch from rest with a straight step, walk, a 90 degree turn as
// four 22.5 degree steps starting on the stance foot opposite to the turn,
// and a two-step stop ramp.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "safenav/game.h"
#include "safenav/keyframe.h"
#include "safenav/keyframe_policy.h"
#include "safenav/world.h"

namespace safenav {

struct ActionState {
  FineState fine;  // stance: the foot the next step stands on (kBoth at rest)
  Phase phase = Phase::kRest;
  int turn_dir = 0;  // +1 right, -1 left while turning

  friend bool operator==(const ActionState&, const ActionState&) = default;
};

std::string to_string(const ActionState& s);

// Staging points: along-offsets 2 and 3 fine cells from the entry edge (the
// edge the heading points away from), lateral fine index 12 or 13.
inline constexpr int kStagingAlong[] = {2, 3};
inline constexpr int kStagingLateral[] = {12, 13};

FineCell staging_cell(Cell c, Heading heading, int along, int lateral, const Environment& env);
std::vector<FineCell> staging_zone(Cell c, Heading heading, const Environment& env);
bool in_staging_zone(FineCell f, Cell c, Heading heading, const Environment& env);

struct ActionGame {
  Cell from;
  Heading heading_in = Heading::kE;
  Heading exit = Heading::kE;
  GameStructure game;
  GR1Spec spec;
  std::vector<ActionState> states;
  std::vector<Action> edge_action;  // per edge
  std::vector<int> starts;          // rest states at the staging points of `from`
  std::unordered_map<std::uint64_t, int> index;

  int index_of(const ActionState& s) const;  // -1 when absent
  bool done(int s) const { return spec.sys_liveness[0].test(s); }
};

// Throws DomainError when exit reverses heading_in.
ActionGame encode_action_game(const Environment& env, Cell from, Heading heading_in, Heading exit);

struct ActionPlan {
  std::shared_ptr<const ActionGame> game;
  SolveResult result;
  // Every staging start is winning.
  bool covers_staging() const;
};

// Footsteps the strategy takes from start state s until it rests at the
// exit staging zone. Throws PolicyGap when s is not winning.
std::vector<std::pair<Action, ActionState>> play(const ActionPlan& plan, int s);

// Synthesized action plans, built on first use.
class ActionPlanner {
 public:
  explicit ActionPlanner(const Environment& env) : env_(env) {}
  const ActionPlan& plan(Cell from, Heading heading_in, Heading exit);
  std::size_t cached() const { return plans_.size(); }

 private:
  Environment env_;
  std::map<std::tuple<int, int, int>, ActionPlan> plans_;
};

}  // namespace safenav
