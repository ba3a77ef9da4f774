#pragma once

// Obstacle beliefs on the coarse grid: an exact cell when the obstacle is in
// view, otherwise a set of environment partitions. A region stands for the
// non-visible, obstacle-accessible cells of its partitions, judged from the
// cell the robot observed from.

#include <cstdint>
#include <string>
#include <vector>

#include "safenav/world.h"

namespace safenav {

struct BeliefState {
  enum class Kind : std::uint8_t { kExact, kRegion };

  Kind kind = Kind::kExact;
  Cell cell;                     // exact
  std::uint32_t partitions = 0;  // region: bit i for partition i

  static BeliefState exact(Cell c) { return {Kind::kExact, c, 0}; }
  static BeliefState region(std::uint32_t mask) { return {Kind::kRegion, {}, mask}; }
  bool is_exact() const { return kind == Kind::kExact; }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

// Pairwise visibility table over coarse cells.
class VisibilityTable {
 public:
  VisibilityTable() = default;
  explicit VisibilityTable(const Environment& env, bool everything = false);
  bool operator()(Cell from, Cell target) const {
    return table_[static_cast<std::size_t>(from.y * width_ + from.x) * cells_ +
                  static_cast<std::size_t>(target.y * width_ + target.x)] != 0;
  }

 private:
  int width_ = 0;
  std::size_t cells_ = 0;
  std::vector<std::uint8_t> table_;
};

// Cells the obstacle may occupy under belief b observed from `observer`.
std::vector<Cell> belief_cells(const BeliefState& b, Cell observer, const Environment& env,
                               const VisibilityTable& vis);

struct BeliefStep {
  Cell robot;            // robot cell when the obstacle moves and is observed
  Cell observed_from;    // cell the current belief was observed from
  bool robot_stopped = true;
};

// One obstacle step from every cell of b (staying allowed, never onto a
// stopped robot), then observation from step.robot: each visible reachable
// cell becomes an exact branch and the non-visible rest collapses into one
// region of the partitions it touches. Exact branches come first in cell
// index order.
std::vector<BeliefState> belief_successor(const BeliefState& b, const BeliefStep& step,
                                          const Environment& env, const VisibilityTable& vis);

// Robot standing at l_rc, belief observed from l_rc.
std::vector<BeliefState> belief_successor(Cell l_rc, const BeliefState& b, const Environment& env);

// The successor branch consistent with an obstacle observed at `truth` from
// `robot`. Throws DomainError when no branch contains it.
BeliefState observe(const std::vector<BeliefState>& options, Cell truth, Cell robot,
                    const Environment& env, const VisibilityTable& vis);

// Belief given the a-priori obstacle location.
BeliefState initial_belief(const Environment& env, const VisibilityTable& vis);

bool belief_contains(const BeliefState& b, Cell c, Cell observer, const Environment& env,
                     const VisibilityTable& vis);

std::string to_string(const BeliefState& b);

// One line of the belief trace:
// "tick <t> robot <x> <y> exact <x> <y>" or
// "tick <t> robot <x> <y> region <p>,<p> cells <x> <y>;<x> <y>"
std::string belief_trace_line(int tick, Cell robot, const BeliefState& b, Cell observer,
                              const Environment& env, const VisibilityTable& vis);

}  // namespace safenav
