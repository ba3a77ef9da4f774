#include "safenav/safety_criteria.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "safenav/errors.h"

namespace safenav {

const char* to_string(SafetyRule r) {
  switch (r) {
    case SafetyRule::kNone: return "none";
    case SafetyRule::kProp1Lower: return "Prop1Lower";
    case SafetyRule::kProp1Upper: return "Prop1Upper";
    case SafetyRule::kProp2Lower: return "Prop2Lower";
    case SafetyRule::kProp2Upper: return "Prop2Upper";
    case SafetyRule::kCorollaryLower: return "CorollaryLower";
    case SafetyRule::kCorollaryUpper: return "CorollaryUpper";
  }
  return "?";
}

namespace {

void check_heading(double delta_theta) {
  if (!(std::abs(delta_theta) <= std::numbers::pi / 4.0 + 1e-12)) {
    throw DomainError("|delta_theta| must not exceed pi/4");
  }
}

void check_step(double d) {
  if (!(d > 0.0)) throw DomainError("step length must be positive");
}

}  // namespace

VelocityBounds steering_apex_bounds(const SteeringGeometry& geom, double omega) {
  check_heading(geom.delta_theta);
  VelocityBounds b;
  if (geom.delta_theta == 0.0) return b;
  const double t = std::tan(geom.delta_theta);
  if (geom.delta_y2_c * t < 0.0) {
    throw IllPosedSteering("delta_y2 points away from the turn");
  }
  b.lower = geom.delta_y2_c * omega * t;
  b.upper = geom.delta_y2_c * omega / t;
  return b;
}

SquaredVelocityBounds straight_consecutive_bounds(double v_apex_c, double d,
                                                  double omega) {
  check_step(d);
  const double base = v_apex_c * v_apex_c;
  const double reach = omega * omega * d * d;
  return {std::max(0.0, base - reach), base + reach};
}

SquaredVelocityBounds steering_consecutive_bounds(double v_apex_c,
                                                  const SteeringGeometry& geom,
                                                  double omega) {
  check_step(geom.d);
  check_heading(geom.delta_theta);
  if (geom.delta_theta == 0.0) {
    return straight_consecutive_bounds(v_apex_c, geom.d, omega);
  }
  const double d_plus_sq =
      geom.d * geom.d + 2.0 * geom.delta_y2_c * geom.d * std::sin(geom.delta_theta);
  if (d_plus_sq < 0.0) {
    throw InfeasibleGeometry("next foot lies behind the rotated apex");
  }
  const double vc = v_apex_c * std::cos(geom.delta_theta);
  const double base = vc * vc;
  const double w2 = omega * omega;
  return {std::max(0.0, base - w2 * geom.d * geom.d), base + w2 * d_plus_sq};
}

SafetyVerdict check_balancing_safety(const ApexState& s_c, const Action& action,
                                     const ApexState& s_n,
                                     const SteeringGeometry& geom, double omega) {
  if (std::abs(action.d - geom.d) > 1e-12 ||
      std::abs(action.delta_theta - geom.delta_theta) > 1e-12) {
    throw DomainError("action and steering geometry disagree");
  }
  SafetyVerdict verdict;
  auto apply = [&verdict](SafetyRule rule, double slack) {
    if (!verdict.safe) return;
    if (slack < 0.0) {
      verdict.safe = false;
      verdict.violated_rule = rule;
      verdict.margin = slack;
    } else {
      verdict.margin = std::min(verdict.margin, slack);
    }
  };

  const double vc = s_c.v_apex;
  const double vn_sq = s_n.v_apex * s_n.v_apex;
  if (geom.delta_theta == 0.0) {
    const SquaredVelocityBounds b = straight_consecutive_bounds(vc, geom.d, omega);
    apply(SafetyRule::kProp2Lower, vn_sq - b.v_n_sq_min);
    apply(SafetyRule::kProp2Upper, b.v_n_sq_max - vn_sq);
    return verdict;
  }

  SteeringGeometry magnitude = geom;
  magnitude.delta_y2_c = std::abs(geom.delta_y2_c);
  magnitude.delta_theta = std::abs(geom.delta_theta);
  const VelocityBounds apex = steering_apex_bounds(magnitude, omega);
  apply(SafetyRule::kProp1Lower, vc - apex.lower);
  apply(SafetyRule::kProp1Upper, apex.upper - vc);
  if (!verdict.safe) return verdict;

  const SquaredVelocityBounds b = steering_consecutive_bounds(vc, geom, omega);
  apply(SafetyRule::kCorollaryLower, vn_sq - b.v_n_sq_min);
  apply(SafetyRule::kCorollaryUpper, b.v_n_sq_max - vn_sq);
  return verdict;
}

}  // namespace safenav
