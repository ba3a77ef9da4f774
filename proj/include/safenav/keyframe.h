#pragma once

#include <string>

#include "safenav/pipm_dynamics.h"

namespace safenav {

inline constexpr double kTurnAngle = 0.39269908169872414;  // 22.5 degrees

enum class StepHeight { kDown2, kDown1, kFlat, kUp1, kUp2 };

double step_height_value(StepHeight h);
StepHeight step_height_from_value(double dz);
const char* to_string(StepHeight h);

// High-level locomotion action for one step.
struct Action {
  double d = 0.4;            // step length (m)
  double delta_theta = 0.0;  // heading change (rad), + turns right
  StepHeight delta_z_foot = StepHeight::kFlat;
  Stance i_st = Stance::kLeft;
  bool c_stop = false;

  bool steering() const { return delta_theta != 0.0; }
};

struct ApexState {
  double v_apex = 0.0;
  double z_apex = kDefaultApexHeight;
};

struct KeyframeState {
  Action action;
  ApexState apex;
};

}  // namespace safenav
