#pragma once

// Vector figures of a simulation trace: sagittal and lateral phase portraits
// with the safety region, a top-down path plot, and grid/belief snapshots.

#include <string>
#include <vector>

#include "safenav/simulation.h"

namespace safenav {

// Position of every trajectory segment relative to the asymptote lines
// v = +-omega (p - p_foot) of its stance foot. The sagittal orbit must stay
// inside the cone above them (first integral >= 0) and the lateral orbit
// between them around the position axis (first integral <= 0).
struct PortraitCheck {
  int segments = 0;
  int outside = 0;
  double worst_sagittal = 0.0;  // smallest sagittal first integral
  double worst_lateral = 0.0;   // largest lateral first integral
  bool ok() const { return segments > 0 && outside == 0; }
};

PortraitCheck check_portraits(const std::vector<StepPlan>& steps, double tol = 1e-9);

// Writes sagittal.svg, lateral.svg, path.svg and belief_<tick>.svg (first,
// middle and last tick unless given) into dir and returns the paths. Throws
// DomainError for a trace without ticks or without recorded trajectories.
std::vector<std::string> emit_figures(const SimulationTrace& trace, const Environment& env,
                                      const std::string& dir, std::vector<int> belief_ticks = {});

}  // namespace safenav
