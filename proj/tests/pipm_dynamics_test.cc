#include "safenav/pipm_dynamics.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle_integrator.h"
#include "safenav/errors.h"

namespace safenav {
namespace {

using testing::AxisState;
using testing::bisect;
using testing::rk4_axis;

const double kOmega = omega_of(9.81, 1.0);

TEST(OmegaTest, KnownValues) {
  EXPECT_NEAR(omega_of(9.81, 1.0), 3.1320919526731650, 1e-12);
  EXPECT_DOUBLE_EQ(omega_of(9.81, 9.81), 1.0);
  EXPECT_DOUBLE_EQ(omega_of(4.0, 1.0), 2.0);
  const PendulumParams p = PendulumParams::make();
  EXPECT_DOUBLE_EQ(p.omega, std::sqrt(p.g / p.h_apex));
}

TEST(OmegaTest, RejectsNonPositive) {
  EXPECT_THROW(omega_of(0.0, 1.0), DomainError);
  EXPECT_THROW(omega_of(9.81, -1.0), DomainError);
  EXPECT_THROW(PendulumParams::make(9.81, 0.0), DomainError);
}

TEST(VelocityAtTest, MatchesIntegratedOrbit) {
  const double v = velocity_at(0.2, 0.0, 0.4, 0.0, kOmega, +1);
  EXPECT_NEAR(v, 0.74324, 1e-5);
  // Oracle: integrate until the CoM passes p = 0.2, then compare speeds.
  AxisState s{0.0, 0.4};
  const double t = [&] {
    AxisState probe = s;
    return testing::rk4_until(
        probe, 0.0, kOmega, [](const AxisState& a) { return a.p >= 0.2; }, 5.0);
  }();
  ASSERT_GT(t, 0.0);
  const double t_exact = time_to_position(0.0, 0.4, 0.0, kOmega, 0.2);
  const AxisState at = rk4_axis(s, 0.0, kOmega, t_exact);
  EXPECT_NEAR(at.p, 0.2, 1e-6);
  EXPECT_NEAR(at.v, v, 1e-6);
}

TEST(VelocityAtTest, IdentityAndErrors) {
  EXPECT_DOUBLE_EQ(velocity_at(0.3, 0.3, -0.7, 0.1, kOmega, +1), -0.7);
  EXPECT_THROW(velocity_at(0.2, 0.0, 0.0, 0.0, kOmega, +1), UnreachableState);
  // Orbit turns around before reaching the foot.
  EXPECT_THROW(velocity_at(0.0, -0.3, 0.2, 0.0, kOmega, +1), UnreachableState);
  EXPECT_LT(velocity_at(0.2, 0.0, 0.4, 0.0, kOmega, -1), 0.0);
}

TEST(FirstIntegralTest, Examples) {
  EXPECT_DOUBLE_EQ(first_integral(0.3, 0.5, 0.3, kOmega), 0.25);
  EXPECT_NEAR(first_integral(0.2, 0.74324, 0.0, kOmega), 0.16, 1e-5);
}

TEST(RolloutTest, ConservesFirstIntegralAndMatchesVelocityAt) {
  const PendulumParams params = PendulumParams::make();
  PhaseState init;
  init.x = 0.0;
  init.vx = 0.4;
  init.y = 0.1;
  init.vy = -0.2;
  FootPlacement foot;
  const PhaseTrajectory traj = rollout(init, foot, params, 0.6, 1e-3);
  ASSERT_GE(traj.samples.size(), 601u);
  const double ex = first_integral(init.x, init.vx, foot.x, params.omega);
  const double ey = first_integral(init.y, init.vy, foot.y, params.omega);
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(first_integral(s.state.x, s.state.vx, foot.x, params.omega), ex, 1e-9);
    EXPECT_NEAR(first_integral(s.state.y, s.state.vy, foot.y, params.omega), ey, 1e-9);
    if (s.t > 0.0) {
      const double v = velocity_at(s.state.x, init.x, init.vx, foot.x, params.omega, +1);
      EXPECT_NEAR(v, s.state.vx, 1e-8);
    }
    EXPECT_DOUBLE_EQ(s.state.z, params.h_apex);
  }
  EXPECT_DOUBLE_EQ(traj.samples.back().t, 0.6);
}

TEST(RolloutTest, EquilibriumStaysPut) {
  const PendulumParams params = PendulumParams::make();
  PhaseState init;
  init.x = 1.5;
  FootPlacement foot;
  foot.x = 1.5;
  const PhaseTrajectory traj = rollout(init, foot, params, 1.0, 0.01);
  for (const auto& s : traj.samples) {
    EXPECT_DOUBLE_EQ(s.state.x, 1.5);
    EXPECT_DOUBLE_EQ(s.state.vx, 0.0);
  }
}

TEST(RolloutTest, CrossingOrbitKeepsVelocitySign) {
  // A > 0, B < 0: the CoM passes over the foot without turning back.
  const PendulumParams params = PendulumParams::make();
  PhaseState init;
  init.x = -0.1;
  init.vx = 0.5;
  const AxisSegment seg = axis_coefficients(init.x, init.vx, 0.0, params.omega);
  ASSERT_LT(seg.coeff_a * seg.coeff_b, 0.0);
  const PhaseTrajectory traj = rollout(init, FootPlacement{}, params, 1.0, 1e-3);
  AxisState oracle{init.x, init.vx};
  double prev_t = 0.0;
  for (const auto& s : traj.samples) {
    EXPECT_GT(s.state.vx, 0.0);
    oracle = rk4_axis(oracle, 0.0, params.omega, s.t - prev_t);
    prev_t = s.t;
    EXPECT_NEAR(oracle.v, s.state.vx, 1e-6);
  }
}

TEST(RolloutTest, RandomizedAgainstRk4) {
  const PendulumParams params = PendulumParams::make();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-0.3, 0.3), vel(-0.6, 0.6);
  for (int trial = 0; trial < 100; ++trial) {
    PhaseState init;
    init.x = pos(rng);
    init.y = pos(rng);
    init.vx = vel(rng);
    init.vy = vel(rng);
    FootPlacement foot;
    foot.x = pos(rng);
    foot.y = pos(rng);
    const PhaseTrajectory traj = rollout(init, foot, params, 1.0, 0.25);
    const AxisState ox = rk4_axis({init.x, init.vx}, foot.x, params.omega, 1.0);
    const AxisState oy = rk4_axis({init.y, init.vy}, foot.y, params.omega, 1.0);
    const PhaseState end = traj.samples.back().state;
    const double scale = std::max(1.0, std::abs(ox.p));
    EXPECT_NEAR(end.x, ox.p, 1e-6 * scale) << trial;
    EXPECT_NEAR(end.vx, ox.v, 1e-6 * scale * kOmega) << trial;
    EXPECT_NEAR(end.y, oy.p, 1e-6 * std::max(1.0, std::abs(oy.p))) << trial;
    EXPECT_NEAR(end.vy, oy.v, 1e-6 * std::max(1.0, std::abs(oy.p)) * kOmega) << trial;
  }
}

TEST(RolloutTest, ParameterValidation) {
  const PendulumParams params = PendulumParams::make();
  EXPECT_THROW(rollout({}, {}, params, 1.0, 0.0), DomainError);
  EXPECT_THROW(rollout({}, {}, params, -1.0, 0.1), DomainError);
}

TEST(RolloutTest, SlopedSurfaceSetsHeight) {
  const PendulumParams params = PendulumParams::make();
  SurfaceSegment surf{0.25, 0.0, 1.0};
  PhaseState init;
  init.vx = 0.4;
  FootPlacement foot;
  foot.z = 0.1;
  const PhaseTrajectory traj = rollout(init, foot, params, 0.3, 0.01, surf);
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(s.state.z, 0.1 + 1.0 + 0.25 * s.state.x, 1e-12);
  }
}

TEST(AppendSegmentTest, ContinuousAtBoundary) {
  const PendulumParams params = PendulumParams::make();
  PhaseState init;
  init.vx = 0.4;
  PhaseTrajectory traj = rollout(init, FootPlacement{}, params, 0.3, 1e-3);
  FootPlacement next;
  next.x = 0.4;
  next.y = 0.1;
  append_segment(traj, next, SurfaceSegment{}, 0.2, 1e-3);
  ASSERT_EQ(traj.segments.size(), 2u);
  const double tb = traj.segments[1].t_begin;
  const PhaseState before = traj.evaluate(tb);
  const TrajectorySegment& s1 = traj.segments[1];
  EXPECT_NEAR(axis_position(s1.sagittal, params.omega, 0.0), before.x, 1e-9);
  EXPECT_NEAR(axis_velocity(s1.sagittal, params.omega, 0.0), before.vx, 1e-9);
  EXPECT_NEAR(axis_position(s1.lateral, params.omega, 0.0), before.y, 1e-9);
  EXPECT_NEAR(axis_velocity(s1.lateral, params.omega, 0.0), before.vy, 1e-9);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    EXPECT_GT(traj.samples[i].t, traj.samples[i - 1].t);
  }
  EXPECT_NEAR(traj.duration(), 0.5, 1e-12);
}

TEST(SwitchingPositionTest, SymmetricStepSwitchesAtMidpoint) {
  EXPECT_NEAR(switching_position(0.0, 0.4, 0.0, 0.4, 0.3, 0.3, kOmega), 0.2, 1e-15);
}

// Intersection of the forward branches of the two orbits, found numerically.
double switch_oracle(double apex_c, double apex_n, double foot_c, double foot_n,
                     double v_c, double v_n, double omega) {
  auto gap = [&](double x) {
    const double ec = v_c * v_c + omega * omega *
        ((x - foot_c) * (x - foot_c) - (apex_c - foot_c) * (apex_c - foot_c));
    const double en = v_n * v_n + omega * omega *
        ((x - foot_n) * (x - foot_n) - (apex_n - foot_n) * (apex_n - foot_n));
    return ec - en;
  };
  return bisect(gap, std::min(apex_c, apex_n), std::max(apex_c, apex_n));
}

TEST(SwitchingPositionTest, AcceleratingStepMatchesBisection) {
  const double x = switching_position(0.0, 0.4, 0.0, 0.4, 0.4, 0.5, kOmega);
  const double oracle = switch_oracle(0.0, 0.4, 0.0, 0.4, 0.4, 0.5, kOmega);
  EXPECT_NEAR(x, oracle, 1e-10);
  EXPECT_NEAR(x, 0.211468, 1e-6);
  // Both orbits carry the same speed at the switch.
  const double vc = velocity_at(x, 0.0, 0.4, 0.0, kOmega, +1);
  const double vn = velocity_at(x, 0.4, 0.5, 0.4, kOmega, +1);
  EXPECT_NEAR(vc, vn, 1e-12);
}

TEST(SwitchingPositionTest, RandomizedAgainstBisection) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(0.15, 0.45), v(0.1, 0.6);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double step = d(rng);
    const double vc = v(rng), vn = v(rng);
    const double x = switching_position(0.0, step, 0.0, step, vc, vn, kOmega);
    if (x <= 0.0 || x >= step) continue;  // rejected by the caller contract
    EXPECT_NEAR(x, switch_oracle(0.0, step, 0.0, step, vc, vn, kOmega), 1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(SwitchingPositionTest, MirrorSymmetry) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5), v(0.1, 0.6);
  for (int trial = 0; trial < 100; ++trial) {
    const double ac = u(rng), an = u(rng), fc = u(rng), fn = u(rng);
    const double vc = v(rng), vn = v(rng);
    if (std::abs(fn - fc) < 1e-3) continue;
    const double x = switching_position(ac, an, fc, fn, vc, vn, kOmega);
    const double mirrored = switching_position(-an, -ac, -fn, -fc, vn, vc, kOmega);
    EXPECT_NEAR(mirrored, -x, 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST(SwitchingPositionTest, Errors) {
  EXPECT_THROW(switching_position(0.0, 0.4, 0.2, 0.2, 0.3, 0.3, kOmega), DegenerateStep);
  EXPECT_THROW(switching_position(0.0, 0.4, 0.0, 0.4, 0.3, 0.3, kOmega, 2.0), DomainError);
  EXPECT_NO_THROW(switching_position(0.0, 0.4, 0.0, 0.4, 0.3, 0.3, kOmega, kOmega));
}

TEST(TimeToPositionTest, AgreesWithRollout) {
  const double t = time_to_position(-0.1, 0.5, 0.0, kOmega, 0.25);
  const AxisSegment seg = axis_coefficients(-0.1, 0.5, 0.0, kOmega);
  EXPECT_NEAR(axis_position(seg, kOmega, t), 0.25, 1e-12);
  EXPECT_THROW(time_to_position(-0.3, 0.2, 0.0, kOmega, 0.1), UnreachableState);
}

TEST(RotateFrameTest, Algebra) {
  PhaseState s;
  s.x = 0.3;
  s.y = -0.1;
  s.z = 1.0;
  s.vx = 0.4;
  s.vy = 0.05;
  const PhaseState same = rotate_frame(s, 0.0);
  EXPECT_EQ(same.x, s.x);
  EXPECT_EQ(same.vy, s.vy);

  PhaseState sag;
  sag.vx = 0.5;
  const double dth = std::numbers::pi / 8.0;
  const PhaseState r = rotate_frame(sag, dth);
  EXPECT_NEAR(r.vx, 0.5 * std::cos(dth), 1e-15);
  EXPECT_NEAR(r.vy, -0.5 * std::sin(dth), 1e-15);

  const PhaseState back = rotate_frame(rotate_frame(s, dth, 0.2, 0.1), -dth, 0.2, 0.1);
  EXPECT_NEAR(back.x, s.x, 1e-12);
  EXPECT_NEAR(back.y, s.y, 1e-12);
  EXPECT_NEAR(back.vx, s.vx, 1e-12);
  EXPECT_NEAR(back.vy, s.vy, 1e-12);
  EXPECT_EQ(back.z, s.z);

  EXPECT_THROW(rotate_frame(s, std::numbers::pi / 2.0), DomainError);
}

TEST(RotateFrameTest, PreservesSpeed) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    PhaseState s;
    s.x = u(rng);
    s.y = u(rng);
    s.vx = u(rng);
    s.vy = u(rng);
    const PhaseState r = rotate_frame(s, a(rng), u(rng), u(rng));
    EXPECT_NEAR(std::hypot(r.vx, r.vy), std::hypot(s.vx, s.vy), 1e-12);
  }
}

TEST(NormalizeAngleTest, Range) {
  EXPECT_DOUBLE_EQ(normalize_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(normalize_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(normalize_angle(3.0 * std::numbers::pi / 2.0), -std::numbers::pi / 2.0, 1e-15);
}

TEST(TrajectoryCsvTest, HeaderAndRows) {
  PhaseState init;
  init.vx = 0.3;
  PhaseTrajectory traj = rollout(init, FootPlacement{}, PendulumParams::make(), 0.01, 0.005);
  traj.frame.id = 4;
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,frame,x,y,z,vx,vy");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
    EXPECT_EQ(line.substr(line.find(',') + 1, 2), "4,");
  }
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace safenav
