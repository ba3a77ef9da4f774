#pragma once

// Closed-form prismatic inverted pendulum (PIPM) trajectories.
//
// Each horizontal axis p in {x, y} obeys p'' = omega^2 (p - p_foot) while the
// CoM height follows a piecewise-linear surface, which gives
//
//   p(t) = A e^{omega t} + B e^{-omega t} + p_foot
//   A = ((p0 - p_foot) + v0 / omega) / 2,  B = ((p0 - p_foot) - v0 / omega) / 2
//
// and the orbit invariant v^2 - omega^2 (p - p_foot)^2 = const.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace safenav {

inline constexpr double kGravity = 9.81;
inline constexpr double kDefaultApexHeight = 1.0;
inline constexpr double kDefaultSampleDt = 1e-3;

struct PendulumParams {
  double g = kGravity;
  double h_apex = kDefaultApexHeight;
  double omega = 0.0;

  // Validates g, h_apex > 0 and derives omega.
  static PendulumParams make(double g = kGravity,
                             double h_apex = kDefaultApexHeight);
};

// CoM height surface h = slope_k (x - x_foot_ref) + h_apex, measured from the
// stance foot.
struct SurfaceSegment {
  double slope_k = 0.0;
  double x_foot_ref = 0.0;
  double h_apex = kDefaultApexHeight;

  double height_at(double x) const { return slope_k * (x - x_foot_ref) + h_apex; }
};

// CoM state in a local frame: x sagittal, y lateral, z vertical.
struct PhaseState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  bool finite() const;
};

struct LocalFrame {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double origin_z = 0.0;
  double heading_theta = 0.0;  // (-pi, pi]
  int id = 0;
};

enum class Stance { kLeft, kRight, kBoth };

const char* to_string(Stance s);

struct FootPlacement {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Stance stance = Stance::kLeft;
};

// One axis of one analytical segment: p(t) = A e^{w(t - t0)} + B e^{-w(t - t0)} + foot.
struct AxisSegment {
  double coeff_a = 0.0;
  double coeff_b = 0.0;
  double foot = 0.0;
};

struct TrajectorySegment {
  AxisSegment sagittal;
  AxisSegment lateral;
  FootPlacement foot;
  SurfaceSegment surface;
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct TrajectorySample {
  double t = 0.0;
  PhaseState state;
  std::size_t segment = 0;
};

struct PhaseTrajectory {
  LocalFrame frame;
  double omega = 0.0;
  std::vector<TrajectorySegment> segments;
  std::vector<TrajectorySample> samples;
  double switch_position = 0.0;

  // Analytical evaluation at absolute time t (clamped to the covered span).
  PhaseState evaluate(double t) const;
  double duration() const;
};

// Normalizes an angle to (-pi, pi].
double normalize_angle(double theta);

double omega_of(double g, double h_apex);

// Orbit velocity at p for the orbit through (p0, v0). branch_sign selects the
// travel direction. Throws UnreachableState for a negative radicand.
double velocity_at(double p, double p0, double v0, double p_foot, double omega,
                   int branch_sign);

// v^2 - omega^2 (p - p_foot)^2.
double first_integral(double p, double v, double p_foot, double omega);

AxisSegment axis_coefficients(double p0, double v0, double p_foot, double omega);
double axis_position(const AxisSegment& seg, double omega, double tau);
double axis_velocity(const AxisSegment& seg, double omega, double tau);

// Time for the orbit through (p0, v0) to reach p travelling forward
// (velocity > 0 throughout). Throws UnreachableState if it never gets there.
double time_to_position(double p0, double v0, double p_foot, double omega,
                        double p);

// Sagittal position where the orbit through apex (apex_c, v_c) over foot_c
// meets the orbit through apex (apex_n, v_n) over foot_n.
double switching_position(double apex_c, double apex_n, double foot_c,
                          double foot_n, double v_c, double v_n, double omega);

// Same, but requires both steps to share omega.
double switching_position(double apex_c, double apex_n, double foot_c,
                          double foot_n, double v_c, double v_n,
                          double omega_c, double omega_n);

// Re-expresses a state in a frame rotated by delta_theta (toward +y) about
// (pivot_x, pivot_y). Requires |delta_theta| < pi/2.
PhaseState rotate_frame(const PhaseState& state, double delta_theta,
                        double pivot_x = 0.0, double pivot_y = 0.0);

// Single-foot analytical rollout from `initial`, sampled every dt.
PhaseTrajectory rollout(const PhaseState& initial, const FootPlacement& foot,
                        const PendulumParams& params, double duration,
                        double dt = kDefaultSampleDt);

PhaseTrajectory rollout(const PhaseState& initial, const FootPlacement& foot,
                        const PendulumParams& params, double duration,
                        double dt, const SurfaceSegment& surface);

// Appends a segment that starts from the trajectory's end state on `foot`.
void append_segment(PhaseTrajectory& traj, const FootPlacement& foot,
                    const SurfaceSegment& surface, double duration, double dt);

// Re-samples all segments every dt (the analytical form is exact regardless).
void resample(PhaseTrajectory& traj, double dt);

// CSV export: fixed header "t,frame,x,y,z,vx,vy".
inline constexpr const char* kTrajectoryCsvHeader = "t,frame,x,y,z,vx,vy";
void write_trajectory_csv(std::ostream& out, const PhaseTrajectory& traj,
                          bool with_header = true);

}  // namespace safenav
