#pragma once

// Balancing-safety checks for a single keyframe transition.

#include <limits>
#include <string>

#include "safenav/keyframe.h"

namespace safenav {

enum class SafetyRule {
  kNone,
  kProp1Lower,
  kProp1Upper,
  kProp2Lower,
  kProp2Upper,
  kCorollaryLower,
  kCorollaryUpper,
};

const char* to_string(SafetyRule r);

struct SafetyVerdict {
  bool safe = true;
  SafetyRule violated_rule = SafetyRule::kNone;
  // Slack of the first violated rule when unsafe, otherwise the smallest slack
  // over all applied rules. m/s for the apex bounds, m^2/s^2 otherwise.
  double margin = std::numeric_limits<double>::infinity();
};

// delta_y2_c is the signed lateral offset of the CoM apex from the stance
// foot; a positive delta_theta turns toward +y.
struct SteeringGeometry {
  double delta_y2_c = 0.0;
  double delta_theta = 0.0;
  double d = 0.4;
};

struct VelocityBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

// Squared-velocity window for the next apex, lower end floored at 0.
struct SquaredVelocityBounds {
  double v_n_sq_min = 0.0;
  double v_n_sq_max = 0.0;

  bool contains(double v_n) const {
    const double sq = v_n * v_n;
    return sq >= v_n_sq_min && sq <= v_n_sq_max;
  }
};

// [dy2 w tan(dth), dy2 w / tan(dth)]. Throws IllPosedSteering when
// dy2 * tan(dth) < 0 and DomainError when |dth| > pi/4.
VelocityBounds steering_apex_bounds(const SteeringGeometry& geom, double omega);

SquaredVelocityBounds straight_consecutive_bounds(double v_apex_c, double d,
                                                  double omega);

// Unified steering form; throws InfeasibleGeometry when
// d^2 + 2 dy2 d sin(dth) < 0.
SquaredVelocityBounds steering_consecutive_bounds(double v_apex_c,
                                                  const SteeringGeometry& geom,
                                                  double omega);

// Applies the apex bounds on |dy2|, |dth| (both turn sides must stay
// balanced) and then the consecutive-velocity rule for the signed geometry.
SafetyVerdict check_balancing_safety(const ApexState& s_c, const Action& action,
                                     const ApexState& s_n,
                                     const SteeringGeometry& geom, double omega);

}  // namespace safenav
