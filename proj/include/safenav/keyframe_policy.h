#pragma once

// Keyframe transition map, its sampled viability map, and the deterministic
// policy that picks the next apex state for a high-level action.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "safenav/keyframe.h"
#include "safenav/pipm_dynamics.h"
#include "safenav/safety_criteria.h"

namespace safenav {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo - 1e-12 && x <= hi + 1e-12; }
};

// Step vocabulary the task planner may issue, used by the kernel.
struct StepVocabulary {
  std::vector<double> straight_d;
  // Step length of turn step k (0..3) when steering against / toward the
  // stance foot.
  std::array<double, 4> turn_d_opposite{};
  std::array<double, 4> turn_d_matching{};
};

struct PolicyConfig {
  PendulumParams pendulum = PendulumParams::make();
  Range v_small{0.1, 0.3};
  Range v_medium{0.3, 0.4};
  Range v_large{0.4, 0.45};
  double v_granularity = 0.05;
  Range d_small{0.2, 0.3};
  Range d_medium{0.3, 0.4};
  Range d_large{0.4, 0.5};
  double straight_d = 0.4;
  double dy1_limit = 0.3;
  double dy2_limit = 0.2;
  // |dy2| assumed when launching from double support at rest.
  double rest_dy2 = 0.08;
  double cruise_v = 0.3;
  double kernel_bin = 0.0025;
  // Viability-map sampling window and resolution.
  Range map_v{0.0, 0.6};
  Range map_dy2{-0.25, 0.25};
  double map_resolution = 0.01;

  // Candidate apex velocities for walking steps, ascending.
  std::vector<double> walking_velocities() const;
  std::vector<double> steering_velocities() const;
};

struct TransitionSample {
  ApexState s_c;
  double delta_y2_c = 0.0;
  Action action;
  ApexState s_n;
  double delta_y1_n = 0.0;
  double delta_y2_n = 0.0;
  bool viable = false;
};

struct TransitionOutcome {
  double delta_y1_n = 0.0;
  double delta_y2_n = 0.0;
};

// Full geometric description of one step, in the frame of the new heading
// with its origin at the current stance foot.
struct StepPlan {
  TransitionOutcome outcome;
  double s0 = 0.0;          // sagittal CoM offset from the stance foot at t = 0
  double l0 = 0.0;          // lateral CoM offset from the stance foot at t = 0
  double x_foot_n = 0.0;    // next foot, sagittal
  double y_foot_n = 0.0;    // next foot, lateral
  double x_switch = 0.0;
  double t_switch = 0.0;
  double t_apex = 0.0;      // time of the next apex (infinite for a stop)
  double v_c_effective = 0.0;
  PhaseTrajectory trajectory;
};

// Rolls the analytical dynamics through one step. Throws InfeasibleTransition
// when the orbits do not connect or no lateral placement gives a simultaneous
// apex.
TransitionOutcome simulate_transition(const ApexState& s_c, double delta_y2_c,
                                      const Action& action,
                                      const ApexState& s_n_candidate,
                                      const PolicyConfig& config = {});

// Same computation, keeping the geometry. With sample_dt > 0 the trajectory
// is sampled; a stop step is truncated at stop_horizon seconds.
StepPlan plan_step(const ApexState& s_c, double delta_y2_c, const Action& action,
                   const ApexState& s_n, const PolicyConfig& config,
                   double sample_dt = 0.0, double stop_horizon = 1.0);

// Geometry handed to the safety checks for this transition.
SteeringGeometry steering_geometry(double delta_y2_c, const Action& action);

SafetyVerdict transition_safety(const ApexState& s_c, double delta_y2_c,
                                const Action& action, const ApexState& s_n,
                                const PolicyConfig& config);

bool is_viable(const TransitionSample& sample, const PolicyConfig& config = {});

// Fills delta_y1_n / delta_y2_n / viable; infeasible transitions are tagged
// non-viable with NaN offsets.
TransitionSample evaluate_transition(const ApexState& s_c, double delta_y2_c,
                                     const Action& action, const ApexState& s_n,
                                     const PolicyConfig& config);

struct ViabilityMap {
  std::vector<Action> actions;
  std::vector<double> v_axis;
  std::vector<double> dy2_axis;
  // actions.size() x v_axis.size() x dy2_axis.size(), row-major.
  std::vector<TransitionSample> samples;

  std::size_t viable_count(std::size_t action_index) const;
  // Nearest-cell lookup.
  const TransitionSample* lookup(std::size_t action_index, double v,
                                 double dy2) const;
};

// Samples v = v_c = v_n and dy2_c on a grid spanning the config window with
// the given resolution (overrides config.map_resolution when > 0).
ViabilityMap build_viability_map(const PolicyConfig& config,
                                 const std::vector<Action>& actions,
                                 double resolution = 0.0);

void write_viability_map_csv(std::ostream& out, const ViabilityMap& map);

// Locomotion phase the kernel reasons about: where a keyframe sits within a
// navigation move.
enum class Phase : std::uint8_t {
  kRest,
  kWalk,
  kTurn1,  // one turn step taken, three to go
  kTurn2,
  kTurn3,
  kRamp1,  // first stop keyframe taken
};

const char* to_string(Phase p);

// Phase after taking `action` in phase `current`. Throws DomainError for an
// action the phase does not allow.
Phase next_phase(Phase current, const Action& action);

// Set of (phase, turn direction, v, dy2 bin) keyframe states from which every
// action sequence in the vocabulary can be answered by a viable step that
// stays in the set. Computed as a greatest fixed point on a dy2 grid.
class ViabilityKernel {
 public:
  ViabilityKernel() = default;
  ViabilityKernel(const PolicyConfig& config, const StepVocabulary& vocab);

  bool contains(Phase phase, int turn_dir, double v, double dy2) const;
  bool launch_ok() const { return launch_ok_; }
  std::size_t size() const;
  const StepVocabulary& vocabulary() const { return vocab_; }

 private:
  std::size_t index(int mode, std::size_t v_index, int bin) const;
  int bin_of(double dy2) const;
  std::optional<std::size_t> v_index(double v) const;

  PolicyConfig config_;
  StepVocabulary vocab_;
  std::vector<double> velocities_;
  int bins_ = 0;
  std::vector<std::uint8_t> members_;
  bool launch_ok_ = false;
};

// Policy inputs beyond the current keyframe: the phase of the current
// keyframe and, for turns, the direction of the turn in progress.
struct PolicyContext {
  Phase phase = Phase::kWalk;
  const ViabilityKernel* kernel = nullptr;
};

// Deterministic next apex state. Candidate velocities follow the locomotion
// rules (hold on straight ground, small while steering or on height changes,
// halve then zero on a stop); among exactly viable candidates those whose
// successor stays in the kernel win, then the one closest to the target,
// then the larger safety margin. Throws PolicyGap when nothing is viable.
ApexState keyframe_policy(const ApexState& s_c, double delta_y2_c,
                          const Action& action, const PolicyConfig& config,
                          const PolicyContext& context = {});

// True when the turn points away from the stance foot, which calls for a
// large step; a turn toward the stance foot takes a small one.
bool turn_is_opposite(Stance stance, double delta_theta);

// Signed dy2 at rest for a stance foot (left stance puts the CoM to its right).
double rest_offset(Stance stance, const PolicyConfig& config);

}  // namespace safenav
