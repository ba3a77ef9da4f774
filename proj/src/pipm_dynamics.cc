#include "safenav/pipm_dynamics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "safenav/errors.h"

namespace safenav {

PendulumParams PendulumParams::make(double g, double h_apex) {
  PendulumParams p;
  p.g = g;
  p.h_apex = h_apex;
  p.omega = omega_of(g, h_apex);
  return p;
}

bool PhaseState::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
         std::isfinite(vx) && std::isfinite(vy);
}

const char* to_string(Stance s) {
  switch (s) {
    case Stance::kLeft: return "left";
    case Stance::kRight: return "right";
    case Stance::kBoth: return "both";
  }
  return "?";
}

double normalize_angle(double theta) {
  constexpr double kPi = std::numbers::pi;
  double r = std::fmod(theta, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

double omega_of(double g, double h_apex) {
  if (!(g > 0.0) || !(h_apex > 0.0)) {
    throw DomainError("omega_of requires g > 0 and h_apex > 0");
  }
  return std::sqrt(g / h_apex);
}

double velocity_at(double p, double p0, double v0, double p_foot, double omega,
                   int branch_sign) {
  const double dp = p - p_foot;
  const double dp0 = p0 - p_foot;
  const double radicand = omega * omega * (dp * dp - dp0 * dp0) + v0 * v0;
  if (radicand < 0.0) {
    throw UnreachableState("orbit through (p0, v0) never reaches p");
  }
  if (p == p0) return v0;
  // The equilibrium orbit never leaves the foot.
  if (v0 == 0.0 && dp0 == 0.0) {
    throw UnreachableState("CoM at rest over the foot stays there");
  }
  return (branch_sign >= 0 ? 1.0 : -1.0) * std::sqrt(radicand);
}

double first_integral(double p, double v, double p_foot, double omega) {
  const double dp = p - p_foot;
  return v * v - omega * omega * dp * dp;
}

AxisSegment axis_coefficients(double p0, double v0, double p_foot,
                              double omega) {
  AxisSegment s;
  s.foot = p_foot;
  s.coeff_a = 0.5 * ((p0 - p_foot) + v0 / omega);
  s.coeff_b = 0.5 * ((p0 - p_foot) - v0 / omega);
  return s;
}

double axis_position(const AxisSegment& seg, double omega, double tau) {
  return seg.coeff_a * std::exp(omega * tau) +
         seg.coeff_b * std::exp(-omega * tau) + seg.foot;
}

double axis_velocity(const AxisSegment& seg, double omega, double tau) {
  return omega * (seg.coeff_a * std::exp(omega * tau) -
                  seg.coeff_b * std::exp(-omega * tau));
}

double time_to_position(double p0, double v0, double p_foot, double omega,
                        double p) {
  if (p == p0) return 0.0;
  const AxisSegment s = axis_coefficients(p0, v0, p_foot, omega);
  if (!(v0 > 0.0) || !(p > p0)) {
    throw UnreachableState("time_to_position needs forward motion");
  }
  const double v = velocity_at(p, p0, v0, p_foot, omega, +1);
  // p + v/omega - p_foot = 2 A e^{omega t}
  const double lhs = (p - p_foot) + v / omega;
  if (!(s.coeff_a > 0.0) || !(lhs > 0.0)) {
    throw UnreachableState("orbit turns back before reaching p");
  }
  const double t = std::log(lhs / (2.0 * s.coeff_a)) / omega;
  if (t < 0.0) throw UnreachableState("position lies behind the state");
  return t;
}

double switching_position(double apex_c, double apex_n, double foot_c,
                          double foot_n, double v_c, double v_n, double omega) {
  if (foot_n == foot_c) {
    throw DegenerateStep("consecutive foot placements coincide");
  }
  const double dc = apex_c - foot_c;
  const double dn = apex_n - foot_n;
  const double c = dc * dc - dn * dn + (v_n * v_n - v_c * v_c) / (omega * omega);
  return 0.5 * (c / (foot_n - foot_c) + (foot_c + foot_n));
}

double switching_position(double apex_c, double apex_n, double foot_c,
                          double foot_n, double v_c, double v_n,
                          double omega_c, double omega_n) {
  if (omega_c != omega_n) {
    throw DomainError("switching requires equal omega across the step");
  }
  return switching_position(apex_c, apex_n, foot_c, foot_n, v_c, v_n, omega_c);
}

PhaseState rotate_frame(const PhaseState& state, double delta_theta,
                        double pivot_x, double pivot_y) {
  if (!(std::abs(delta_theta) < std::numbers::pi / 2.0)) {
    throw DomainError("rotate_frame requires |delta_theta| < pi/2");
  }
  const double c = std::cos(delta_theta);
  const double s = std::sin(delta_theta);
  const double rx = state.x - pivot_x;
  const double ry = state.y - pivot_y;
  PhaseState out = state;
  out.x = pivot_x + rx * c + ry * s;
  out.y = pivot_y - rx * s + ry * c;
  out.vx = state.vx * c + state.vy * s;
  out.vy = -state.vx * s + state.vy * c;
  return out;
}

namespace {

PhaseState evaluate_segment(const TrajectorySegment& seg, double omega,
                            double t) {
  const double tau = t - seg.t_begin;
  PhaseState s;
  s.x = axis_position(seg.sagittal, omega, tau);
  s.vx = axis_velocity(seg.sagittal, omega, tau);
  s.y = axis_position(seg.lateral, omega, tau);
  s.vy = axis_velocity(seg.lateral, omega, tau);
  s.z = seg.foot.z + seg.surface.height_at(s.x);
  return s;
}

void sample_segment(PhaseTrajectory& traj, std::size_t index, double dt,
                    bool skip_first) {
  const TrajectorySegment& seg = traj.segments[index];
  const double span = seg.t_end - seg.t_begin;
  const auto n = static_cast<long>(std::floor(span / dt + 1e-9));
  for (long k = skip_first ? 1 : 0; k <= n; ++k) {
    const double t = seg.t_begin + static_cast<double>(k) * dt;
    traj.samples.push_back({t, evaluate_segment(seg, traj.omega, t), index});
  }
  if (static_cast<double>(n) * dt < span - 1e-12) {
    traj.samples.push_back(
        {seg.t_end, evaluate_segment(seg, traj.omega, seg.t_end), index});
  }
}

}  // namespace

PhaseState PhaseTrajectory::evaluate(double t) const {
  if (segments.empty()) return {};
  for (const auto& seg : segments) {
    if (t <= seg.t_end) {
      return evaluate_segment(seg, omega, std::max(t, seg.t_begin));
    }
  }
  return evaluate_segment(segments.back(), omega, segments.back().t_end);
}

double PhaseTrajectory::duration() const {
  return segments.empty() ? 0.0 : segments.back().t_end - segments.front().t_begin;
}

PhaseTrajectory rollout(const PhaseState& initial, const FootPlacement& foot,
                        const PendulumParams& params, double duration,
                        double dt) {
  SurfaceSegment flat;
  flat.h_apex = params.h_apex;
  flat.x_foot_ref = foot.x;
  return rollout(initial, foot, params, duration, dt, flat);
}

PhaseTrajectory rollout(const PhaseState& initial, const FootPlacement& foot,
                        const PendulumParams& params, double duration,
                        double dt, const SurfaceSegment& surface) {
  if (!(dt > 0.0)) throw DomainError("rollout requires dt > 0");
  if (!(duration >= 0.0)) throw DomainError("rollout requires duration >= 0");
  if (!(params.omega > 0.0)) throw DomainError("pendulum params not initialized");
  if (!initial.finite()) throw DomainError("rollout from a non-finite state");
  PhaseTrajectory traj;
  traj.omega = params.omega;
  TrajectorySegment seg;
  seg.foot = foot;
  seg.surface = surface;
  seg.sagittal = axis_coefficients(initial.x, initial.vx, foot.x, params.omega);
  seg.lateral = axis_coefficients(initial.y, initial.vy, foot.y, params.omega);
  seg.t_begin = 0.0;
  seg.t_end = duration;
  traj.segments.push_back(seg);
  sample_segment(traj, 0, dt, false);
  return traj;
}

void append_segment(PhaseTrajectory& traj, const FootPlacement& foot,
                    const SurfaceSegment& surface, double duration, double dt) {
  if (traj.segments.empty()) throw DomainError("append to an empty trajectory");
  const TrajectorySegment& last = traj.segments.back();
  const PhaseState end = evaluate_segment(last, traj.omega, last.t_end);
  TrajectorySegment seg;
  seg.foot = foot;
  seg.surface = surface;
  seg.sagittal = axis_coefficients(end.x, end.vx, foot.x, traj.omega);
  seg.lateral = axis_coefficients(end.y, end.vy, foot.y, traj.omega);
  seg.t_begin = last.t_end;
  seg.t_end = last.t_end + duration;
  traj.segments.push_back(seg);
  sample_segment(traj, traj.segments.size() - 1, dt, true);
}

void resample(PhaseTrajectory& traj, double dt) {
  if (!(dt > 0.0)) throw DomainError("resample requires dt > 0");
  traj.samples.clear();
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    sample_segment(traj, i, dt, i > 0);
  }
}

void write_trajectory_csv(std::ostream& out, const PhaseTrajectory& traj,
                          bool with_header) {
  if (with_header) out << kTrajectoryCsvHeader << '\n';
  const auto old_precision = out.precision(10);
  for (const auto& s : traj.samples) {
    out << s.t << ',' << traj.frame.id << ',' << s.state.x << ',' << s.state.y
        << ',' << s.state.z << ',' << s.state.vx << ',' << s.state.vy << '\n';
  }
  out.precision(old_precision);
}

}  // namespace safenav
