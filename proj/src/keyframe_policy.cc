#include "safenav/keyframe_policy.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "safenav/errors.h"

namespace safenav {

double step_height_value(StepHeight h) {
  switch (h) {
    case StepHeight::kDown2: return -0.2;
    case StepHeight::kDown1: return -0.1;
    case StepHeight::kFlat: return 0.0;
    case StepHeight::kUp1: return 0.1;
    case StepHeight::kUp2: return 0.2;
  }
  return 0.0;
}

StepHeight step_height_from_value(double dz) {
  const long k = std::lround(dz / 0.1);
  if (std::abs(dz - 0.1 * static_cast<double>(k)) > 1e-6 || k < -2 || k > 2) {
    throw DomainError("step height is not one of the five classes");
  }
  return static_cast<StepHeight>(k + 2);
}

const char* to_string(StepHeight h) {
  switch (h) {
    case StepHeight::kDown2: return "down2";
    case StepHeight::kDown1: return "down1";
    case StepHeight::kFlat: return "flat";
    case StepHeight::kUp1: return "up1";
    case StepHeight::kUp2: return "up2";
  }
  return "?";
}

namespace {

std::vector<double> granules(const Range& r, double g) {
  std::vector<double> out;
  const auto lo = static_cast<long>(std::ceil(r.lo / g - 1e-9));
  const auto hi = static_cast<long>(std::floor(r.hi / g + 1e-9));
  for (long k = lo; k <= hi; ++k) out.push_back(static_cast<double>(k) * g);
  return out;
}

double ramp_target(double v, double g) {
  return std::max(g, std::round(0.5 * v / g) * g);
}

}  // namespace

std::vector<double> PolicyConfig::walking_velocities() const {
  return granules({v_small.lo, v_large.hi}, v_granularity);
}

std::vector<double> PolicyConfig::steering_velocities() const {
  return granules(v_small, v_granularity);
}

StepPlan plan_step(const ApexState& s_c, double delta_y2_c, const Action& action,
                   const ApexState& s_n, const PolicyConfig& config,
                   double sample_dt, double stop_horizon) {
  const double w = config.pendulum.omega;
  const double vn = s_n.v_apex;
  if (s_c.v_apex < 0.0 || vn < 0.0) throw DomainError("negative apex velocity");
  if (!(action.d > 0.0)) throw DomainError("step length must be positive");
  if (!(std::abs(action.delta_theta) < std::numbers::pi / 2.0)) {
    throw DomainError("heading change must stay below 90 degrees");
  }
  if (s_c.v_apex == 0.0 && vn == 0.0) {
    throw InfeasibleTransition("a step needs motion at one of its apexes");
  }

  StepPlan plan;
  // Launching from rest is treated as already walking at the target speed.
  const double vc = s_c.v_apex == 0.0 ? vn : s_c.v_apex;
  plan.v_c_effective = vc;
  const double dth = action.delta_theta;
  plan.s0 = delta_y2_c * std::sin(dth);
  plan.l0 = delta_y2_c * std::cos(dth);
  const double vx = vc * std::cos(dth);
  const double vy = -vc * std::sin(dth);
  plan.x_foot_n = plan.s0 + action.d;
  if (!(plan.x_foot_n > 0.0)) {
    throw InfeasibleTransition("next foot lies behind the stance foot");
  }

  plan.x_switch = switching_position(plan.s0, plan.x_foot_n, 0.0, plan.x_foot_n,
                                     vx, vn, w);
  if (!(plan.x_switch >= plan.s0 && plan.x_switch <= plan.x_foot_n)) {
    throw InfeasibleTransition("switch falls outside the step");
  }
  try {
    plan.t_switch = time_to_position(plan.s0, vx, 0.0, w, plan.x_switch);
  } catch (const UnreachableState&) {
    throw InfeasibleTransition("CoM turns back before the switch");
  }

  const AxisSegment lat1 = axis_coefficients(plan.l0, vy, 0.0, w);
  const double y_sw = axis_position(lat1, w, plan.t_switch);
  const double ydot_sw = axis_velocity(lat1, w, plan.t_switch);

  double coth = 1.0;
  if (vn > 0.0) {
    const double t2 = std::asinh((plan.x_foot_n - plan.x_switch) * w / vn) / w;
    if (!(t2 > 0.0)) {
      throw InfeasibleTransition("no lateral placement gives a simultaneous apex");
    }
    plan.t_apex = plan.t_switch + t2;
    coth = 1.0 / std::tanh(w * t2);
  } else {
    plan.t_apex = std::numeric_limits<double>::infinity();
  }
  // Lateral orbit on the new foot reaches v_y = 0 exactly at the sagittal apex.
  const double u = -(ydot_sw / w) * coth;
  plan.y_foot_n = y_sw - u;
  const double sq = u * u - (ydot_sw / w) * (ydot_sw / w);
  const double dy2n = vn > 0.0 ? std::copysign(std::sqrt(std::max(0.0, sq)), u) : 0.0;
  const double y_apex_n = plan.y_foot_n + dy2n;
  const double waypoint = 0.5 * plan.y_foot_n;
  plan.outcome = {waypoint - y_apex_n, dy2n};

  if (sample_dt > 0.0) {
    const double dz = step_height_value(action.delta_z_foot);
    const double slope = dz / (plan.x_foot_n - plan.s0);
    const SurfaceSegment surf_c{slope, plan.s0, config.pendulum.h_apex};
    const SurfaceSegment surf_n{slope, plan.x_foot_n, config.pendulum.h_apex};
    PhaseState start;
    start.x = plan.s0;
    start.y = plan.l0;
    start.vx = vx;
    start.vy = vy;
    start.z = config.pendulum.h_apex;
    FootPlacement foot_c{0.0, 0.0, 0.0, action.i_st};
    plan.trajectory = rollout(start, foot_c, config.pendulum, plan.t_switch,
                              sample_dt, surf_c);
    FootPlacement foot_n{plan.x_foot_n, plan.y_foot_n, dz,
                         action.i_st == Stance::kLeft ? Stance::kRight : Stance::kLeft};
    const double t2 = std::min(plan.t_apex - plan.t_switch, stop_horizon);
    append_segment(plan.trajectory, foot_n, surf_n, t2, sample_dt);
    plan.trajectory.switch_position = plan.x_switch;
  }
  return plan;
}

TransitionOutcome simulate_transition(const ApexState& s_c, double delta_y2_c,
                                      const Action& action,
                                      const ApexState& s_n_candidate,
                                      const PolicyConfig& config) {
  return plan_step(s_c, delta_y2_c, action, s_n_candidate, config).outcome;
}

SteeringGeometry steering_geometry(double delta_y2_c, const Action& action) {
  return {delta_y2_c, action.delta_theta, action.d};
}

SafetyVerdict transition_safety(const ApexState& s_c, double delta_y2_c,
                                const Action& action, const ApexState& s_n,
                                const PolicyConfig& config) {
  ApexState effective = s_c;
  if (effective.v_apex == 0.0) effective.v_apex = s_n.v_apex;
  return check_balancing_safety(effective, action, s_n,
                                steering_geometry(delta_y2_c, action),
                                config.pendulum.omega);
}

bool is_viable(const TransitionSample& sample, const PolicyConfig& config) {
  const double dy1 = sample.delta_y1_n;
  const double dy2 = sample.delta_y2_n;
  if (!std::isfinite(dy1) || !std::isfinite(dy2)) return false;
  if (std::abs(dy1) > config.dy1_limit || std::abs(dy2) > config.dy2_limit) return false;
  if (std::abs(sample.delta_y2_c) > config.dy2_limit) return false;
  if (dy1 * dy2 < 0.0) return false;
  if (dy2 * sample.delta_y2_c > 0.0) return false;
  try {
    return transition_safety(sample.s_c, sample.delta_y2_c, sample.action,
                             sample.s_n, config)
        .safe;
  } catch (const Error&) {
    return false;
  }
}

TransitionSample evaluate_transition(const ApexState& s_c, double delta_y2_c,
                                     const Action& action, const ApexState& s_n,
                                     const PolicyConfig& config) {
  TransitionSample s;
  s.s_c = s_c;
  s.delta_y2_c = delta_y2_c;
  s.action = action;
  s.s_n = s_n;
  try {
    const TransitionOutcome out = simulate_transition(s_c, delta_y2_c, action, s_n, config);
    s.delta_y1_n = out.delta_y1_n;
    s.delta_y2_n = out.delta_y2_n;
    s.viable = is_viable(s, config);
  } catch (const Error&) {
    s.delta_y1_n = std::numeric_limits<double>::quiet_NaN();
    s.delta_y2_n = std::numeric_limits<double>::quiet_NaN();
    s.viable = false;
  }
  return s;
}

std::size_t ViabilityMap::viable_count(std::size_t action_index) const {
  const std::size_t n = v_axis.size() * dy2_axis.size();
  const auto begin = samples.begin() + static_cast<std::ptrdiff_t>(action_index * n);
  return static_cast<std::size_t>(std::count_if(
      begin, begin + static_cast<std::ptrdiff_t>(n),
      [](const TransitionSample& s) { return s.viable; }));
}

namespace {

std::size_t nearest(const std::vector<double>& axis, double x) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), x);
  if (it == axis.begin()) return 0;
  if (it == axis.end()) return axis.size() - 1;
  const auto i = static_cast<std::size_t>(it - axis.begin());
  return (x - axis[i - 1] <= axis[i] - x) ? i - 1 : i;
}

}  // namespace

const TransitionSample* ViabilityMap::lookup(std::size_t action_index, double v,
                                             double dy2) const {
  if (action_index >= actions.size() || v_axis.empty() || dy2_axis.empty()) {
    return nullptr;
  }
  const std::size_t i = nearest(v_axis, v);
  const std::size_t j = nearest(dy2_axis, dy2);
  return &samples[(action_index * v_axis.size() + i) * dy2_axis.size() + j];
}

ViabilityMap build_viability_map(const PolicyConfig& config,
                                 const std::vector<Action>& actions,
                                 double resolution) {
  const double res = resolution > 0.0 ? resolution : config.map_resolution;
  if (!(res > 0.0)) throw DomainError("map resolution must be positive");
  ViabilityMap map;
  map.actions = actions;
  map.v_axis = granules(config.map_v, res);
  map.dy2_axis = granules(config.map_dy2, res);
  map.samples.reserve(actions.size() * map.v_axis.size() * map.dy2_axis.size());
  for (const Action& a : actions) {
    for (double v : map.v_axis) {
      for (double dy2 : map.dy2_axis) {
        const ApexState s{v, config.pendulum.h_apex};
        map.samples.push_back(evaluate_transition(s, dy2, a, s, config));
      }
    }
  }
  return map;
}

void write_viability_map_csv(std::ostream& out, const ViabilityMap& map) {
  out << "d,delta_theta_deg,delta_z,stance,v,dy2_c,dy1_n,dy2_n,viable\n";
  const auto old = out.precision(8);
  for (const TransitionSample& s : map.samples) {
    out << s.action.d << ',' << s.action.delta_theta * 180.0 / std::numbers::pi << ','
        << step_height_value(s.action.delta_z_foot) << ',' << to_string(s.action.i_st)
        << ',' << s.s_c.v_apex << ',' << s.delta_y2_c << ',' << s.delta_y1_n << ','
        << s.delta_y2_n << ',' << (s.viable ? 1 : 0) << '\n';
  }
  out.precision(old);
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kRest: return "rest";
    case Phase::kWalk: return "walk";
    case Phase::kTurn1: return "turn1";
    case Phase::kTurn2: return "turn2";
    case Phase::kTurn3: return "turn3";
    case Phase::kRamp1: return "ramp1";
  }
  return "?";
}

Phase next_phase(Phase current, const Action& action) {
  const bool turn = action.steering();
  if (turn && action.c_stop) throw DomainError("a stop step cannot steer");
  switch (current) {
    case Phase::kRest:
      if (turn || action.c_stop) throw DomainError("leave rest with a straight step");
      return Phase::kWalk;
    case Phase::kWalk:
      if (action.c_stop) return Phase::kRamp1;
      return turn ? Phase::kTurn1 : Phase::kWalk;
    case Phase::kTurn1:
    case Phase::kTurn2:
    case Phase::kTurn3:
      if (!turn) throw DomainError("a turn runs for four steps");
      if (current == Phase::kTurn1) return Phase::kTurn2;
      if (current == Phase::kTurn2) return Phase::kTurn3;
      return Phase::kWalk;
    case Phase::kRamp1:
      if (!action.c_stop) throw DomainError("a stop ramp runs for two steps");
      return Phase::kRest;
  }
  return current;
}

bool turn_is_opposite(Stance stance, double delta_theta) {
  if (stance == Stance::kLeft) return delta_theta > 0.0;
  if (stance == Stance::kRight) return delta_theta < 0.0;
  throw DomainError("turn side needs a single stance foot");
}

double rest_offset(Stance stance, const PolicyConfig& config) {
  if (stance == Stance::kLeft) return config.rest_dy2;
  if (stance == Stance::kRight) return -config.rest_dy2;
  throw DomainError("rest offset needs a single stance foot");
}

// ---------------------------------------------------------------------------
// Kernel

namespace {

constexpr int kModeWalk = 0;
constexpr int kModeRamp1 = 1;
constexpr int kModeCount = 8;
constexpr int kRestTarget = -1;

int turn_mode(int step_done, int dir) {
  return 2 + (step_done - 1) * 2 + (dir > 0 ? 0 : 1);
}

int mode_of(Phase p, int dir) {
  switch (p) {
    case Phase::kWalk: return kModeWalk;
    case Phase::kRamp1: return kModeRamp1;
    case Phase::kTurn1: return turn_mode(1, dir);
    case Phase::kTurn2: return turn_mode(2, dir);
    case Phase::kTurn3: return turn_mode(3, dir);
    case Phase::kRest: return kRestTarget;
  }
  return kRestTarget;
}

struct Requirement {
  double d;
  double dth;
  int target_mode;
  std::vector<std::size_t> candidates;  // indices into the velocity table
};

}  // namespace

std::size_t ViabilityKernel::index(int mode, std::size_t v_index, int bin) const {
  const auto width = static_cast<std::size_t>(2 * bins_ + 1);
  return (static_cast<std::size_t>(mode) * velocities_.size() + v_index) * width +
         static_cast<std::size_t>(bin + bins_);
}

int ViabilityKernel::bin_of(double dy2) const {
  return static_cast<int>(std::lround(dy2 / config_.kernel_bin));
}

std::optional<std::size_t> ViabilityKernel::v_index(double v) const {
  for (std::size_t i = 0; i < velocities_.size(); ++i) {
    if (std::abs(velocities_[i] - v) < 1e-9) return i;
  }
  return std::nullopt;
}

ViabilityKernel::ViabilityKernel(const PolicyConfig& config, const StepVocabulary& vocab)
    : config_(config), vocab_(vocab) {
  const double g = config.v_granularity;
  velocities_ = granules({g, config.v_large.hi}, g);
  bins_ = static_cast<int>(std::lround(config.dy2_limit / config.kernel_bin));
  const int width = 2 * bins_ + 1;
  members_.assign(static_cast<std::size_t>(kModeCount) * velocities_.size() *
                      static_cast<std::size_t>(width),
                  1);

  auto indices_of = [&](const std::vector<double>& vs) {
    std::vector<std::size_t> out;
    for (double v : vs) {
      if (auto i = v_index(v)) out.push_back(*i);
    }
    return out;
  };
  const std::vector<std::size_t> walking = indices_of(config.walking_velocities());
  const std::vector<std::size_t> steering = indices_of(config.steering_velocities());

  auto requirements = [&](int mode, double v, double dy2) {
    std::vector<Requirement> reqs;
    if (mode == kModeWalk) {
      for (double d : vocab.straight_d) {
        reqs.push_back({d, 0.0, kModeWalk, walking});
        reqs.push_back({d, 0.0, kModeWalk, steering});
        const auto ramp = v_index(ramp_target(v, g));
        reqs.push_back({d, 0.0, kModeRamp1,
                        ramp ? std::vector<std::size_t>{*ramp} : std::vector<std::size_t>{}});
      }
      // Turns start on the stance foot that makes the first step an opposite
      // one; the planner picks the step parity.
      for (int dir : {1, -1}) {
        if (dy2 * dir > 0.0) {
          reqs.push_back({vocab.turn_d_opposite[0], dir * kTurnAngle, turn_mode(1, dir),
                          steering});
        }
      }
    } else if (mode == kModeRamp1) {
      for (double d : vocab.straight_d) reqs.push_back({d, 0.0, kRestTarget, {}});
    } else {
      const int k = (mode - 2) / 2 + 1;
      const int dir = ((mode - 2) % 2 == 0) ? 1 : -1;
      const int target = k == 3 ? kModeWalk : turn_mode(k + 1, dir);
      for (bool opp : {true, false}) {
        if (dy2 != 0.0 && opp != (dy2 * dir > 0.0)) continue;
        const double d = opp ? vocab.turn_d_opposite[k] : vocab.turn_d_matching[k];
        reqs.push_back({d, dir * kTurnAngle, target, steering});
      }
    }
    return reqs;
  };

  constexpr int kDead = std::numeric_limits<int>::min();
  // A candidate must work from the centre and both edges of the dy2 bin.
  struct Edge {
    int target_mode;
    std::size_t v;
    std::array<int, 3> bins;
  };
  struct StateReqs {
    std::vector<std::vector<Edge>> options;
  };
  std::vector<StateReqs> table(members_.size());

  auto transition = [&](double vc, double dy2, double d, double dth, double vn) {
    Action a;
    a.d = d;
    a.delta_theta = dth;
    const TransitionSample s = evaluate_transition({vc, config.pendulum.h_apex}, dy2, a,
                                                   {vn, config.pendulum.h_apex}, config);
    return s.viable ? bin_of(s.delta_y2_n) : kDead;
  };
  const double half = 0.5 * config.kernel_bin;
  auto robust = [&](double vc, double dy2, double d, double dth,
                    double vn) -> std::optional<std::array<int, 3>> {
    std::array<int, 3> out{};
    const std::array<double, 3> starts{dy2 - half, dy2, dy2 + half};
    for (std::size_t i = 0; i < 3; ++i) {
      out[i] = transition(vc, starts[i], d, dth, vn);
      if (out[i] == kDead || std::abs(out[i]) > bins_) return std::nullopt;
    }
    return out;
  };

  for (int mode = 0; mode < kModeCount; ++mode) {
    for (std::size_t vi = 0; vi < velocities_.size(); ++vi) {
      for (int b = -bins_; b <= bins_; ++b) {
        const std::size_t idx = index(mode, vi, b);
        const double v = velocities_[vi];
        // Only stop ramps pass through the lowest granule.
        // A centered CoM in walking has no side to turn from.
        if ((mode != kModeRamp1 && v < config.v_small.lo - 1e-9) ||
            (mode == kModeWalk && b == 0)) {
          members_[idx] = 0;
          continue;
        }
        const double dy2 = b * config.kernel_bin;
        for (const Requirement& r : requirements(mode, v, dy2)) {
          std::vector<Edge> edges;
          if (r.target_mode == kRestTarget) {
            if (robust(v, dy2, r.d, r.dth, 0.0)) edges.push_back({kRestTarget, 0, {}});
          } else {
            for (std::size_t ci : r.candidates) {
              if (auto nb = robust(v, dy2, r.d, r.dth, velocities_[ci])) {
                edges.push_back({r.target_mode, ci, *nb});
              }
            }
          }
          table[idx].options.push_back(std::move(edges));
        }
      }
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t idx = 0; idx < members_.size(); ++idx) {
      if (!members_[idx]) continue;
      for (const auto& edges : table[idx].options) {
        const bool ok = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
          return e.target_mode == kRestTarget ||
                 std::all_of(e.bins.begin(), e.bins.end(), [&](int b) {
                   return members_[index(e.target_mode, e.v, b)] != 0;
                 });
        });
        if (!ok) {
          members_[idx] = 0;
          changed = true;
          break;
        }
      }
    }
  }

  // Launch from rest: every straight step must have a viable answer that
  // lands in the kernel, from either stance.
  launch_ok_ = true;
  for (double sign : {1.0, -1.0}) {
    const double dy2 = sign * config.rest_dy2;
    for (double d : vocab.straight_d) {
      for (const auto* cands : {&walking, &steering}) {
        bool ok = false;
        for (std::size_t ci : *cands) {
          const int nb = transition(0.0, dy2, d, 0.0, velocities_[ci]);
          if (nb != kDead && std::abs(nb) <= bins_ &&
              members_[index(kModeWalk, ci, nb)]) {
            ok = true;
            break;
          }
        }
        launch_ok_ = launch_ok_ && ok;
      }
    }
  }
}

bool ViabilityKernel::contains(Phase phase, int turn_dir, double v, double dy2) const {
  if (members_.empty()) return false;
  const int mode = mode_of(phase, turn_dir);
  if (mode == kRestTarget) return true;
  const auto vi = v_index(v);
  if (!vi) return false;
  const int b = bin_of(dy2);
  if (std::abs(b) > bins_) return false;
  return members_[index(mode, *vi, b)] != 0;
}

std::size_t ViabilityKernel::size() const {
  return static_cast<std::size_t>(std::count(members_.begin(), members_.end(), 1));
}

// ---------------------------------------------------------------------------
// Policy

ApexState keyframe_policy(const ApexState& s_c, double delta_y2_c,
                          const Action& action, const PolicyConfig& config,
                          const PolicyContext& context) {
  const Phase after = next_phase(context.phase, action);
  const double g = config.v_granularity;
  const double vc = s_c.v_apex;
  const bool height_change = action.delta_z_foot != StepHeight::kFlat;

  std::vector<double> candidates;
  double target = vc;
  if (action.c_stop) {
    target = context.phase == Phase::kRamp1 ? 0.0 : ramp_target(vc, g);
    candidates = {target};
  } else if (action.steering() || height_change) {
    candidates = config.steering_velocities();
    target = std::clamp(vc, config.v_small.lo, config.v_small.hi);
  } else {
    candidates = config.walking_velocities();
    if (vc == 0.0) target = config.cruise_v;
  }

  const double z_n = s_c.z_apex + step_height_value(action.delta_z_foot);
  const int dir = action.delta_theta > 0.0 ? 1 : (action.delta_theta < 0.0 ? -1 : 0);

  struct Scored {
    bool in_kernel;
    double distance;
    double margin;
    double v;
  };
  std::optional<Scored> best;
  for (double v : candidates) {
    const ApexState s_n{v, z_n};
    const TransitionSample sample = evaluate_transition(s_c, delta_y2_c, action, s_n, config);
    if (!sample.viable) continue;
    const double margin = transition_safety(s_c, delta_y2_c, action, s_n, config).margin;
    const bool in_kernel =
        context.kernel == nullptr ||
        context.kernel->contains(after, dir, v, sample.delta_y2_n);
    const Scored s{in_kernel, std::abs(v - target), margin, v};
    auto better = [](const Scored& a, const Scored& b) {
      if (a.in_kernel != b.in_kernel) return a.in_kernel;
      if (std::abs(a.distance - b.distance) > 1e-9) return a.distance < b.distance;
      if (a.margin != b.margin) return a.margin > b.margin;
      return a.v < b.v;
    };
    if (!best || better(s, *best)) best = s;
  }
  if (!best) {
    throw PolicyGap("no viable next apex state for this action");
  }
  return {best->v, z_n};
}

}  // namespace safenav
