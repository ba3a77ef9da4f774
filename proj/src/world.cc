#include "safenav/world.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "safenav/errors.h"

namespace safenav {

using nlohmann::json;

const char* to_string(Heading h) {
  switch (h) {
    case Heading::kN: return "N";
    case Heading::kE: return "E";
    case Heading::kS: return "S";
    case Heading::kW: return "W";
  }
  return "?";
}

Heading heading_from_string(const std::string& s) {
  if (s == "N") return Heading::kN;
  if (s == "E") return Heading::kE;
  if (s == "S") return Heading::kS;
  if (s == "W") return Heading::kW;
  throw DomainError("unknown heading '" + s + "'");
}

Cell step(Cell c, Heading h) {
  switch (h) {
    case Heading::kN: return {c.x, c.y + 1};
    case Heading::kE: return {c.x + 1, c.y};
    case Heading::kS: return {c.x, c.y - 1};
    case Heading::kW: return {c.x - 1, c.y};
  }
  return c;
}

Heading reverse(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 2) % 4);
}

int fine_heading(Heading h) { return 4 * static_cast<int>(h); }

std::optional<Heading> cardinal_of(int fine_heading) {
  if (fine_heading < 0 || fine_heading > 15 || fine_heading % 4 != 0) return std::nullopt;
  return static_cast<Heading>(fine_heading / 4);
}

std::optional<Heading> direction_between(Cell a, Cell b) {
  for (Heading h : {Heading::kN, Heading::kE, Heading::kS, Heading::kW}) {
    if (step(a, h) == b) return h;
  }
  return std::nullopt;
}

bool Environment::in_bounds(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
}

bool Environment::blocked(Cell c) const {
  return std::find(static_obstacles.begin(), static_obstacles.end(), c) !=
         static_obstacles.end();
}

const Stair* Environment::stair_at(Cell c) const {
  for (const Stair& s : stairs) {
    if (s.cell == c) return &s;
  }
  return nullptr;
}

bool Environment::obstacle_allowed(Cell c) const { return free(c) && !stair_at(c); }

int Environment::partition_of(Cell c) const {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (std::find(partitions[i].begin(), partitions[i].end(), c) != partitions[i].end()) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

bool Environment::fine_in_bounds(FineCell f) const {
  return f.x >= 0 && f.y >= 0 && f.x < width * fine && f.y < height * fine;
}

double Environment::terrain_height(FineCell f) const {
  const Cell c = coarse_of(f);
  double h = floor[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)];
  if (const Stair* s = stair_at(c)) {
    const int offset = s->axis == StairAxis::kEastWest ? f.x - c.x * fine : f.y - c.y * fine;
    for (int r : s->risers) {
      if (offset >= r) h += s->rise;
    }
  }
  return h;
}

Waypoint Environment::waypoint(FineCell f) const {
  const double p = pitch();
  return {(f.x + 0.5) * p, (f.y + 0.5) * p, terrain_height(f)};
}

bool vis(Cell from, Cell target, const Environment& env) {
  if (std::max(std::abs(from.x - target.x), std::abs(from.y - target.y)) >
      env.visibility_radius) {
    return false;
  }
  const double x0 = from.x + 0.5, y0 = from.y + 0.5;
  const double dx = target.x - from.x, dy = target.y - from.y;
  for (const Cell& o : env.static_obstacles) {
    if (o == from || o == target) continue;
    // Liang-Barsky against the closed square [o.x, o.x+1] x [o.y, o.y+1]:
    // grazing a corner blocks the view.
    double t0 = 0.0, t1 = 1.0;
    auto clip = [&](double p, double q) {
      if (p == 0.0) return q >= 0.0;
      const double r = q / p;
      if (p < 0.0) {
        if (r > t1) return false;
        t0 = std::max(t0, r);
      } else {
        if (r < t0) return false;
        t1 = std::min(t1, r);
      }
      return true;
    };
    if (clip(-dx, x0 - o.x) && clip(dx, o.x + 1 - x0) && clip(-dy, y0 - o.y) &&
        clip(dy, o.y + 1 - y0) && t0 <= t1) {
      return false;
    }
  }
  return true;
}

namespace {

bool along_axis(const Stair& s, Heading dir) {
  const bool ew = dir == Heading::kE || dir == Heading::kW;
  return ew == (s.axis == StairAxis::kEastWest);
}

}  // namespace

bool coarse_move_allowed(Cell from, Heading dir, const Environment& env) {
  const Cell to = step(from, dir);
  if (!env.free(from) || !env.free(to)) return false;
  if (const Stair* s = env.stair_at(from); s && !along_axis(*s, dir)) return false;
  if (const Stair* s = env.stair_at(to); s && !along_axis(*s, dir)) return false;
  return true;
}

std::vector<Cell> coarse_neighbors(const CoarseState& state, const Environment& env) {
  std::vector<Cell> out;
  for (Heading h : {Heading::kN, Heading::kE, Heading::kS, Heading::kW}) {
    if (coarse_move_allowed(state.cell, h, env)) out.push_back(step(state.cell, h));
  }
  return out;
}

FineCell fine_displacement(double d, int heading, double pitch) {
  const double b = heading * kTurnAngle;
  return {static_cast<int>(std::lround(d * std::sin(b) / pitch)),
          static_cast<int>(std::lround(d * std::cos(b) / pitch))};
}

FineStep fine_step_target(const FineState& state, const Action& action,
                          const Environment& env) {
  if (state.stance != Stance::kBoth && action.i_st != state.stance) {
    throw IllegalFineMove("stance must alternate");
  }
  if (action.i_st == Stance::kBoth) throw IllegalFineMove("a step needs a stance foot");
  const long turns = std::lround(action.delta_theta / kTurnAngle);
  if (std::abs(action.delta_theta - turns * kTurnAngle) > 1e-9) {
    throw IllegalFineMove("heading change is not a multiple of 22.5 degrees");
  }
  FineStep out;
  out.state.heading = static_cast<int>(((state.heading + turns) % 16 + 16) % 16);
  const FineCell disp = fine_displacement(action.d, out.state.heading, env.pitch());
  out.state.cell = {state.cell.x + disp.x, state.cell.y + disp.y};
  out.state.stance = action.i_st == Stance::kLeft ? Stance::kRight : Stance::kLeft;
  if (!env.fine_in_bounds(out.state.cell)) throw IllegalFineMove("step leaves the map");
  if (env.blocked(env.coarse_of(out.state.cell))) {
    throw IllegalFineMove("step lands in a static obstacle");
  }
  const double dz = env.terrain_height(out.state.cell) - env.terrain_height(state.cell);
  try {
    out.delta_z = step_height_from_value(dz);
  } catch (const DomainError&) {
    throw IllegalFineMove("height step is not traversable");
  }
  out.waypoint = env.waypoint(out.state.cell);
  return out;
}

StepVocabulary step_vocabulary(const Environment& env) {
  // (forward, lateral) fine displacement of turn step k relative to the
  // heading the turn started from.
  static constexpr std::array<std::array<int, 2>, 4> kLarge{{{4, 2}, {3, 3}, {2, 4}, {0, 4}}};
  static constexpr std::array<std::array<int, 2>, 4> kSmall{{{2, 1}, {2, 2}, {1, 2}, {0, 2}}};
  const double p = env.pitch();
  StepVocabulary v;
  v.straight_d = {2 * p, 3 * p, 4 * p};
  for (std::size_t k = 0; k < 4; ++k) {
    v.turn_d_opposite[k] = std::hypot(kLarge[k][0], kLarge[k][1]) * p;
    v.turn_d_matching[k] = std::hypot(kSmall[k][0], kSmall[k][1]) * p;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Environment documents

namespace {

constexpr const char* kSchema = "safenav-environment/1";

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw LoadError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      fail(where + "/" + it.key(), "unknown field");
    }
  }
  for (const char* k : allowed) {
    if (!obj.contains(k)) fail(where + "/" + k, "missing field");
  }
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

Cell get_cell(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
  return {get_int(j[0], where + "/0"), get_int(j[1], where + "/1")};
}

std::vector<Cell> get_cells(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of cells");
  std::vector<Cell> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_cell(j[i], where + "/" + std::to_string(i)));
  }
  return out;
}

json cell_json(Cell c) { return json::array({c.x, c.y}); }

json cells_json(const std::vector<Cell>& cells) {
  json out = json::array();
  for (const Cell& c : cells) out.push_back(cell_json(c));
  return out;
}

bool height_class(double dz) {
  const double k = std::round(dz / 0.1);
  return std::abs(dz - 0.1 * k) < 1e-6 && std::abs(k) <= 2.0;
}

void validate(const Environment& env) {
  auto cell_ok = [&](Cell c, const std::string& where) {
    if (!env.in_bounds(c)) fail(where, "cell out of bounds");
  };
  for (std::size_t i = 0; i < env.static_obstacles.size(); ++i) {
    cell_ok(env.static_obstacles[i], "/static_obstacles/" + std::to_string(i));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string where = "/goals/" + std::to_string(i);
    cell_ok(env.goals[i], where);
    if (env.blocked(env.goals[i])) fail(where, "goal on a static obstacle");
  }
  cell_ok(env.robot_start.cell, "/robot_start/cell");
  if (env.blocked(env.robot_start.cell)) fail("/robot_start/cell", "start on a static obstacle");
  cell_ok(env.obstacle_start, "/obstacle_start");
  if (env.blocked(env.obstacle_start)) fail("/obstacle_start", "start on a static obstacle");
  if (env.obstacle_start == env.robot_start.cell) {
    fail("/obstacle_start", "obstacle starts on the robot");
  }
  if (env.visibility_radius < 0) fail("/visibility_radius", "must be non-negative");

  for (std::size_t i = 0; i < env.stairs.size(); ++i) {
    const Stair& s = env.stairs[i];
    const std::string where = "/stairs/" + std::to_string(i);
    cell_ok(s.cell, where + "/cell");
    if (env.blocked(s.cell)) fail(where + "/cell", "stair on a static obstacle");
    int last = 0;
    for (int r : s.risers) {
      if (r <= last || r >= env.fine) fail(where + "/risers", "risers must increase inside the cell");
      last = r;
    }
    if (!height_class(s.rise)) fail(where + "/rise", "rise is not a step-height class");
    for (std::size_t j = 0; j < i; ++j) {
      if (env.stairs[j].cell == s.cell) fail(where + "/cell", "duplicate stair cell");
    }
  }

  std::vector<int> owner(static_cast<std::size_t>(env.cell_count()), -1);
  for (std::size_t p = 0; p < env.partitions.size(); ++p) {
    if (env.partitions[p].empty()) fail("/partitions/" + std::to_string(p), "empty partition");
    for (std::size_t i = 0; i < env.partitions[p].size(); ++i) {
      const Cell c = env.partitions[p][i];
      const std::string where = "/partitions/" + std::to_string(p) + "/" + std::to_string(i);
      cell_ok(c, where);
      int& o = owner[static_cast<std::size_t>(env.cell_index(c))];
      if (o != -1) fail(where, "cell belongs to two partitions");
      o = static_cast<int>(p);
    }
  }
  for (int i = 0; i < env.cell_count(); ++i) {
    if (owner[static_cast<std::size_t>(i)] == -1) {
      const Cell c = env.cell_at(i);
      fail("/partitions", "cell [" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                              "] is in no partition");
    }
  }

  // Height steps between neighbouring fine cells that a walk can cross.
  for (int gy = 0; gy < env.height * env.fine; ++gy) {
    for (int gx = 0; gx < env.width * env.fine; ++gx) {
      const FineCell a{gx, gy};
      const Cell ca = env.coarse_of(a);
      if (env.blocked(ca)) continue;
      for (const FineCell b : {FineCell{gx + 1, gy}, FineCell{gx, gy + 1}}) {
        if (!env.fine_in_bounds(b)) continue;
        const Cell cb = env.coarse_of(b);
        if (env.blocked(cb)) continue;
        if (!(ca == cb)) {
          const auto dir = direction_between(ca, cb);
          if (!dir || !coarse_move_allowed(ca, *dir, env)) continue;
        }
        if (!height_class(env.terrain_height(b) - env.terrain_height(a))) {
          fail("/floor_heights", "untraversable height step between fine cells [" +
                                     std::to_string(gx) + ", " + std::to_string(gy) +
                                     "] and [" + std::to_string(b.x) + ", " +
                                     std::to_string(b.y) + "]");
        }
      }
    }
  }
}

}  // namespace

Environment load_environment(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("malformed document: ") + e.what());
  }
  check_keys(doc, "",
             {"schema", "name", "coarse_dims", "coarse_cell_size", "fine_dims",
              "visibility_radius", "static_obstacles", "goals", "robot_start",
              "obstacle_start", "floor_heights", "stairs", "partitions"});
  if (doc["schema"] != kSchema) fail("/schema", std::string("expected \"") + kSchema + "\"");
  Environment env;
  if (!doc["name"].is_string()) fail("/name", "expected a string");
  env.name = doc["name"].get<std::string>();

  const json& dims = doc["coarse_dims"];
  if (!dims.is_array() || dims.size() != 2) fail("/coarse_dims", "expected [width, height]");
  env.width = get_int(dims[0], "/coarse_dims/0");
  env.height = get_int(dims[1], "/coarse_dims/1");
  if (env.width <= 0 || env.height <= 0) fail("/coarse_dims", "dimensions must be positive");
  env.cell_size = get_number(doc["coarse_cell_size"], "/coarse_cell_size");
  if (!(env.cell_size > 0.0)) fail("/coarse_cell_size", "must be positive");
  const json& fdims = doc["fine_dims"];
  if (!fdims.is_array() || fdims.size() != 2) fail("/fine_dims", "expected [n, n]");
  env.fine = get_int(fdims[0], "/fine_dims/0");
  if (env.fine <= 0 || get_int(fdims[1], "/fine_dims/1") != env.fine) {
    fail("/fine_dims", "fine grid must be square and non-empty");
  }
  env.visibility_radius = get_int(doc["visibility_radius"], "/visibility_radius");
  env.static_obstacles = get_cells(doc["static_obstacles"], "/static_obstacles");
  const std::vector<Cell> goals = get_cells(doc["goals"], "/goals");
  if (goals.size() != 2) fail("/goals", "expected two goal cells");
  env.goals = {goals[0], goals[1]};

  const json& rs = doc["robot_start"];
  check_keys(rs, "/robot_start", {"cell", "heading"});
  env.robot_start.cell = get_cell(rs["cell"], "/robot_start/cell");
  try {
    env.robot_start.heading = heading_from_string(rs["heading"].get<std::string>());
  } catch (const std::exception&) {
    fail("/robot_start/heading", "expected one of N, E, S, W");
  }
  env.obstacle_start = get_cell(doc["obstacle_start"], "/obstacle_start");

  const json& fh = doc["floor_heights"];
  if (!fh.is_array() || static_cast<int>(fh.size()) != env.height) {
    fail("/floor_heights", "expected one row per coarse row");
  }
  for (std::size_t y = 0; y < fh.size(); ++y) {
    const std::string where = "/floor_heights/" + std::to_string(y);
    if (!fh[y].is_array() || static_cast<int>(fh[y].size()) != env.width) {
      fail(where, "expected one height per coarse column");
    }
    std::vector<double> row;
    for (std::size_t x = 0; x < fh[y].size(); ++x) {
      row.push_back(get_number(fh[y][x], where + "/" + std::to_string(x)));
    }
    env.floor.push_back(std::move(row));
  }

  const json& st = doc["stairs"];
  if (!st.is_array()) fail("/stairs", "expected a list");
  for (std::size_t i = 0; i < st.size(); ++i) {
    const std::string where = "/stairs/" + std::to_string(i);
    check_keys(st[i], where, {"cell", "axis", "risers", "rise"});
    Stair s;
    s.cell = get_cell(st[i]["cell"], where + "/cell");
    const json& axis = st[i]["axis"];
    if (axis == "east-west") {
      s.axis = StairAxis::kEastWest;
    } else if (axis == "north-south") {
      s.axis = StairAxis::kNorthSouth;
    } else {
      fail(where + "/axis", "expected \"east-west\" or \"north-south\"");
    }
    const json& risers = st[i]["risers"];
    if (!risers.is_array()) fail(where + "/risers", "expected a list");
    for (std::size_t k = 0; k < risers.size(); ++k) {
      s.risers.push_back(get_int(risers[k], where + "/risers/" + std::to_string(k)));
    }
    s.rise = get_number(st[i]["rise"], where + "/rise");
    env.stairs.push_back(std::move(s));
  }

  const json& parts = doc["partitions"];
  if (!parts.is_array()) fail("/partitions", "expected a list");
  for (std::size_t p = 0; p < parts.size(); ++p) {
    env.partitions.push_back(get_cells(parts[p], "/partitions/" + std::to_string(p)));
  }

  validate(env);
  return env;
}

Environment load_environment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_environment(buf.str());
}

std::string serialize_environment(const Environment& env) {
  json doc;
  doc["schema"] = kSchema;
  doc["name"] = env.name;
  doc["coarse_dims"] = json::array({env.width, env.height});
  doc["coarse_cell_size"] = env.cell_size;
  doc["fine_dims"] = json::array({env.fine, env.fine});
  doc["visibility_radius"] = env.visibility_radius;
  doc["static_obstacles"] = cells_json(env.static_obstacles);
  doc["goals"] = cells_json({env.goals[0], env.goals[1]});
  doc["robot_start"] = {{"cell", cell_json(env.robot_start.cell)},
                        {"heading", to_string(env.robot_start.heading)}};
  doc["obstacle_start"] = cell_json(env.obstacle_start);
  doc["floor_heights"] = env.floor;
  json stairs = json::array();
  for (const Stair& s : env.stairs) {
    stairs.push_back({{"cell", cell_json(s.cell)},
                      {"axis", s.axis == StairAxis::kEastWest ? "east-west" : "north-south"},
                      {"risers", s.risers},
                      {"rise", s.rise}});
  }
  doc["stairs"] = stairs;
  json parts = json::array();
  for (const auto& p : env.partitions) parts.push_back(cells_json(p));
  doc["partitions"] = parts;
  return doc.dump(2) + "\n";
}

Environment with_single_partition(const Environment& env) {
  Environment out = env;
  out.partitions.assign(1, {});
  for (int i = 0; i < env.cell_count(); ++i) out.partitions[0].push_back(env.cell_at(i));
  return out;
}

}  // namespace safenav
