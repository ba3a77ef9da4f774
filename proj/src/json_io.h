#pragma once

// JSON records shared by the trace writer and the session protocol.

#include <json.hpp>

#include "safenav/simulation.h"

namespace safenav {

using json = nlohmann::json;

inline json cell_json(Cell c) { return json::array({c.x, c.y}); }

inline json belief_json(const BeliefState& b) {
  if (b.is_exact()) return {{"kind", "exact"}, {"cell", cell_json(b.cell)}};
  json parts = json::array();
  for (int p = 0; p < 32; ++p) {
    if (b.partitions >> p & 1u) parts.push_back(p);
  }
  return {{"kind", "region"}, {"partitions", parts}};
}

inline json keyframe_json(const KeyframeRecord& k) {
  return {{"type", "keyframe"},
          {"tick", k.tick},
          {"cell", cell_json(k.cell)},
          {"fine", json::array({k.fine.cell.x, k.fine.cell.y})},
          {"fine_heading", k.fine.heading},
          {"phase", to_string(k.phase)},
          {"action",
           {{"d", k.action.d},
            {"delta_theta", k.action.delta_theta},
            {"delta_z", to_string(k.action.delta_z_foot)},
            {"stance", to_string(k.action.i_st)},
            {"stop", k.action.c_stop}}},
          {"v_apex", k.apex.v_apex},
          {"z_apex", k.apex.z_apex},
          {"delta_y1", k.delta_y1},
          {"delta_y2", k.delta_y2},
          {"margin", k.margin},
          {"viable", k.viable}};
}

inline json outcome_json(const Outcome& o) {
  return {{"type", "outcome"},
          {"ticks", o.ticks},
          {"goal_visits", o.goal_visits},
          {"collisions", o.collisions},
          {"safety_violations", o.safety_violations},
          {"belief_failures", o.belief_failures},
          {"env_loss", o.env_loss},
          {"aborted", o.aborted},
          {"max_goal_gap", o.max_goal_gap},
          {"max_env_gap", o.max_env_gap},
          {"liveness_bound", o.liveness_bound},
          {"accepted", o.accepted()}};
}

}  // namespace safenav
