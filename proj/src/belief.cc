#include "safenav/belief.h"

#include <algorithm>
#include <sstream>

#include "safenav/errors.h"

namespace safenav {

VisibilityTable::VisibilityTable(const Environment& env, bool everything)
    : width_(env.width), cells_(static_cast<std::size_t>(env.cell_count())), table_(cells_ * cells_, 0) {
  for (int a = 0; a < env.cell_count(); ++a) {
    for (int b = 0; b < env.cell_count(); ++b) {
      table_[static_cast<std::size_t>(a) * cells_ + static_cast<std::size_t>(b)] =
          everything || vis(env.cell_at(a), env.cell_at(b), env);
    }
  }
}

std::vector<Cell> belief_cells(const BeliefState& b, Cell observer, const Environment& env,
                               const VisibilityTable& vis) {
  if (b.is_exact()) return {b.cell};
  std::vector<Cell> out;
  for (std::size_t p = 0; p < env.partitions.size(); ++p) {
    if (!(b.partitions >> p & 1u)) continue;
    for (const Cell& c : env.partitions[p]) {
      if (env.obstacle_allowed(c) && !vis(observer, c)) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [&](Cell a, Cell c) { return env.cell_index(a) < env.cell_index(c); });
  return out;
}

bool belief_contains(const BeliefState& b, Cell c, Cell observer, const Environment& env,
                     const VisibilityTable& vis) {
  if (b.is_exact()) return b.cell == c;
  const int p = env.partition_of(c);
  return p >= 0 && (b.partitions >> p & 1u) && env.obstacle_allowed(c) && !vis(observer, c);
}

std::vector<BeliefState> belief_successor(const BeliefState& b, const BeliefStep& step,
                                          const Environment& env, const VisibilityTable& vis) {
  std::vector<char> reach(static_cast<std::size_t>(env.cell_count()), 0);
  auto mark = [&](Cell c) {
    if (!env.obstacle_allowed(c)) return;
    if (step.robot_stopped && c == step.robot) return;
    reach[static_cast<std::size_t>(env.cell_index(c))] = 1;
  };
  for (const Cell& c : belief_cells(b, step.observed_from, env, vis)) {
    mark(c);
    for (Heading h : {Heading::kN, Heading::kE, Heading::kS, Heading::kW}) {
      const Cell n = safenav::step(c, h);
      if (env.in_bounds(n)) mark(n);
    }
  }
  std::vector<BeliefState> out;
  std::uint32_t hidden = 0;
  for (int i = 0; i < env.cell_count(); ++i) {
    if (!reach[static_cast<std::size_t>(i)]) continue;
    const Cell c = env.cell_at(i);
    if (vis(step.robot, c)) {
      out.push_back(BeliefState::exact(c));
    } else {
      const int p = env.partition_of(c);
      if (p < 0) throw DomainError("cell outside every partition");
      hidden |= 1u << p;
    }
  }
  if (hidden) out.push_back(BeliefState::region(hidden));
  return out;
}

std::vector<BeliefState> belief_successor(Cell l_rc, const BeliefState& b, const Environment& env) {
  const VisibilityTable vis(env);
  return belief_successor(b, {l_rc, l_rc, true}, env, vis);
}

BeliefState observe(const std::vector<BeliefState>& options, Cell truth, Cell robot,
                    const Environment& env, const VisibilityTable& vis) {
  for (const BeliefState& b : options) {
    if (b.is_exact() == vis(robot, truth) && belief_contains(b, truth, robot, env, vis)) return b;
  }
  throw DomainError("observation inconsistent with the belief");
}

BeliefState initial_belief(const Environment& env, const VisibilityTable& vis) {
  if (vis(env.robot_start.cell, env.obstacle_start)) return BeliefState::exact(env.obstacle_start);
  return BeliefState::region(1u << env.partition_of(env.obstacle_start));
}

std::string to_string(const BeliefState& b) {
  std::ostringstream out;
  if (b.is_exact()) {
    out << "E(" << b.cell.x << "," << b.cell.y << ")";
    return out.str();
  }
  out << "R{";
  bool first = true;
  for (int p = 0; p < 32; ++p) {
    if (!(b.partitions >> p & 1u)) continue;
    out << (first ? "" : ",") << p;
    first = false;
  }
  out << "}";
  return out.str();
}

std::string belief_trace_line(int tick, Cell robot, const BeliefState& b, Cell observer,
                              const Environment& env, const VisibilityTable& vis) {
  std::ostringstream out;
  out << "tick " << tick << " robot " << robot.x << " " << robot.y;
  if (b.is_exact()) {
    out << " exact " << b.cell.x << " " << b.cell.y;
    return out.str();
  }
  out << " region ";
  bool first = true;
  for (int p = 0; p < 32; ++p) {
    if (!(b.partitions >> p & 1u)) continue;
    out << (first ? "" : ",") << p;
    first = false;
  }
  out << " cells ";
  first = true;
  for (const Cell& c : belief_cells(b, observer, env, vis)) {
    out << (first ? "" : ";") << c.x << " " << c.y;
    first = false;
  }
  return out.str();
}

}  // namespace safenav
