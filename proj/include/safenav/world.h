#pragma once

// Two-level grid world: an 11 x 5 coarse navigation grid of 2.7 m cells, each
// split into 26 x 26 fine cells carrying terrain heights.
//
// World frame: x east, y north. Coarse cell (x, y) covers
// [x, x + 1) x [y, y + 1) in cell units. Fine cells use global indices
// gx = x * fine + fx. Fine headings are compass bearings in 22.5 degree steps
// (0 = N, 4 = E, 8 = S, 12 = W), so a positive heading change turns right.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safenav/keyframe.h"
#include "safenav/keyframe_policy.h"

namespace safenav {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Heading : std::uint8_t { kN, kE, kS, kW };

const char* to_string(Heading h);
Heading heading_from_string(const std::string& s);
Cell step(Cell c, Heading h);
Heading reverse(Heading h);
// Fine heading index (0..15) of a cardinal heading.
int fine_heading(Heading h);
std::optional<Heading> cardinal_of(int fine_heading);
// Heading of the move from a to an adjacent cell b.
std::optional<Heading> direction_between(Cell a, Cell b);

struct CoarseState {
  Cell cell;
  Heading heading = Heading::kE;
};

struct FineCell {
  int x = 0;  // global fine index
  int y = 0;

  friend bool operator==(const FineCell&, const FineCell&) = default;
  friend auto operator<=>(const FineCell&, const FineCell&) = default;
};

struct FineState {
  FineCell cell;
  int heading = 4;  // 0..15
  Stance stance = Stance::kBoth;
};

// Fine-cell centroid at terrain height.
struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

enum class StairAxis : std::uint8_t { kEastWest, kNorthSouth };

// A stair cell: heights change by `rise` at each listed fine offset along the
// axis (east or north), starting from the cell's floor height.
struct Stair {
  Cell cell;
  StairAxis axis = StairAxis::kEastWest;
  std::vector<int> risers;
  double rise = 0.0;
};

struct Environment {
  std::string name;
  int width = 11;
  int height = 5;
  double cell_size = 2.7;
  int fine = 26;
  int visibility_radius = 2;
  std::vector<Cell> static_obstacles;
  std::array<Cell, 2> goals{};
  CoarseState robot_start;
  Cell obstacle_start;
  // floor[y][x]: base height of each coarse cell.
  std::vector<std::vector<double>> floor;
  std::vector<Stair> stairs;
  std::vector<std::vector<Cell>> partitions;

  double pitch() const { return cell_size / fine; }
  bool in_bounds(Cell c) const;
  bool blocked(Cell c) const;
  bool free(Cell c) const { return in_bounds(c) && !blocked(c); }
  const Stair* stair_at(Cell c) const;
  // The dynamic obstacle moves on level floor only.
  bool obstacle_allowed(Cell c) const;
  int cell_index(Cell c) const { return c.y * width + c.x; }
  Cell cell_at(int index) const { return {index % width, index / width}; }
  int cell_count() const { return width * height; }
  // Index of the partition holding c, or -1.
  int partition_of(Cell c) const;

  Cell coarse_of(FineCell f) const { return {f.x / fine, f.y / fine}; }
  bool fine_in_bounds(FineCell f) const;
  double terrain_height(FineCell f) const;
  Waypoint waypoint(FineCell f) const;
};

// Chebyshev radius plus line of sight between cell centres; a static
// obstacle blocks when the segment touches it, corners included.
bool vis(Cell from, Cell target, const Environment& env);

// 4-connected free neighbours; stair cells are entered and left only along
// their axis.
std::vector<Cell> coarse_neighbors(const CoarseState& state, const Environment& env);
bool coarse_move_allowed(Cell from, Heading dir, const Environment& env);

struct FineStep {
  FineState state;
  Waypoint waypoint;
  StepHeight delta_z = StepHeight::kFlat;
};

// Applies the heading change, then moves d along the new heading rounded to
// whole fine cells. The stance alternates. Throws IllegalFineMove when the
// target leaves the map, lands in a static obstacle, or the height step is
// not one of the five classes.
FineStep fine_step_target(const FineState& state, const Action& action,
                          const Environment& env);

// Fine displacement (east, north) of a step of length d at fine heading h.
FineCell fine_displacement(double d, int heading, double pitch);

// Step lengths the planner issues, in fine pitches: straight steps of 2, 3 and
// 4 pitches, and turn steps whose rounded displacement follows the 22.5 degree
// headings (large when turning away from the stance foot, small otherwise).
StepVocabulary step_vocabulary(const Environment& env);

Environment load_environment(const std::string& document);
Environment load_environment_file(const std::string& path);
std::string serialize_environment(const Environment& env);

// Same environment with one partition holding every cell.
Environment with_single_partition(const Environment& env);

}  // namespace safenav
