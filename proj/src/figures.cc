#include "safenav/figures.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "safenav/errors.h"

namespace safenav {
namespace {

constexpr double kDegree = 3.14159265358979323846 / 180.0;

double first_integral_of(const AxisSegment& s, double omega) {
  return -4.0 * omega * omega * s.coeff_a * s.coeff_b;
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad(double f) {
    const double dx = std::max(x1 - x0, 1e-3) * f, dy = std::max(y1 - y0, 1e-3) * f;
    x0 -= dx;
    x1 += dx;
    y0 -= dy;
    y1 += dy;
  }
};

// Minimal SVG canvas mapping data coordinates into a plot area.
class Svg {
 public:
  Svg(double width, double height, Bounds b, double margin = 50.0)
      : w_(width), h_(height), m_(margin), b_(b) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
         << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<clipPath id=\"plot\"><rect x=\"" << m_ << "\" y=\"" << m_ << "\" width=\"" << w_ - 2 * m_
         << "\" height=\"" << h_ - 2 * m_ << "\"/></clipPath>\n";
  }

  double px(double x) const { return m_ + (x - b_.x0) / (b_.x1 - b_.x0) * (w_ - 2 * m_); }
  double py(double y) const { return h_ - m_ - (y - b_.y0) / (b_.y1 - b_.y0) * (h_ - 2 * m_); }

  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
    out_ << "<polygon clip-path=\"url(#plot)\" points=\"" << points(pts) << "\" " << style << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
    out_ << "<polyline clip-path=\"url(#plot)\" fill=\"none\" points=\"" << points(pts) << "\" " << style
         << "/>\n";
  }
  void rect(double x0, double y0, double x1, double y1, const std::string& style) {
    out_ << "<rect x=\"" << px(x0) << "\" y=\"" << py(y1) << "\" width=\"" << px(x1) - px(x0) << "\" height=\""
         << py(y0) - py(y1) << "\" " << style << "/>\n";
  }
  void circle(double x, double y, double r, const std::string& style) {
    out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r << "\" " << style << "/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "middle") {
    out_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }
  void axes(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    out_ << "<rect x=\"" << m_ << "\" y=\"" << m_ << "\" width=\"" << w_ - 2 * m_ << "\" height=\"" << h_ - 2 * m_
         << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (b_.x0 < 0 && b_.x1 > 0) {
      out_ << "<line x1=\"" << px(0) << "\" y1=\"" << m_ << "\" x2=\"" << px(0) << "\" y2=\"" << h_ - m_
           << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    }
    if (b_.y0 < 0 && b_.y1 > 0) {
      out_ << "<line x1=\"" << m_ << "\" y1=\"" << py(0) << "\" x2=\"" << w_ - m_ << "\" y2=\"" << py(0)
           << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    }
    text(w_ / 2, m_ - 15, title);
    text(w_ / 2, h_ - 12, xlabel);
    out_ << "<text x=\"14\" y=\"" << h_ / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << h_ / 2
         << ")\">" << ylabel << "</text>\n";
    text(m_, h_ - m_ + 14, number(b_.x0), "start");
    text(w_ - m_, h_ - m_ + 14, number(b_.x1), "end");
    text(m_ - 4, h_ - m_, number(b_.y0), "end");
    text(m_ - 4, m_ + 8, number(b_.y1), "end");
  }

  void save(const std::string& path) {
    out_ << "</svg>\n";
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write " + path);
    f << out_.str();
  }

 private:
  static std::string number(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  }
  std::string points(const std::vector<std::pair<double, double>>& pts) const {
    std::ostringstream s;
    for (const auto& [x, y] : pts) s << px(x) << "," << py(y) << " ";
    return s.str();
  }

  double w_, h_, m_;
  Bounds b_;
  std::ostringstream out_;
};

// Per-segment samples relative to the segment's stance foot.
std::vector<std::vector<std::pair<double, double>>> relative_orbits(const StepPlan& step, bool lateral) {
  std::vector<std::vector<std::pair<double, double>>> out(step.trajectory.segments.size());
  for (const TrajectorySample& s : step.trajectory.samples) {
    const TrajectorySegment& seg = step.trajectory.segments[s.segment];
    if (lateral) {
      out[s.segment].emplace_back(s.state.y - seg.lateral.foot, s.state.vy);
    } else {
      out[s.segment].emplace_back(s.state.x - seg.sagittal.foot, s.state.vx);
    }
  }
  return out;
}

void portrait(const SimulationTrace& trace, bool lateral, const std::string& path) {
  const double omega = trace.steps.front().trajectory.omega;
  Bounds b;
  for (const StepPlan& s : trace.steps) {
    for (const auto& orbit : relative_orbits(s, lateral)) {
      for (const auto& [p, v] : orbit) b.add(p, v);
    }
  }
  b.add(0.0, 0.0);
  b.pad(0.05);
  Svg svg(560, 420, b);
  const double l = std::max(std::abs(b.x0), std::abs(b.x1)) * 4;
  const std::string shade = "fill=\"#cde7cd\" stroke=\"#4a8a4a\" stroke-width=\"1\"";
  if (lateral) {
    svg.polygon({{0, 0}, {-l, omega * l}, {-l, -omega * l}}, shade);
    svg.polygon({{0, 0}, {l, omega * l}, {l, -omega * l}}, shade);
  } else {
    const double top = std::max(omega * l, b.y1) * 2;
    svg.polygon({{0, 0}, {-l, omega * l}, {-l, top}, {l, top}, {l, omega * l}}, shade);
  }
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const KeyframeRecord* k = i < trace.keyframes.size() ? &trace.keyframes[i] : nullptr;
    std::string colour = "#555";
    if (k && k->action.steering()) colour = "#c0392b";
    if (k && k->action.c_stop) colour = "#2c6fbb";
    for (const auto& orbit : relative_orbits(trace.steps[i], lateral)) {
      if (orbit.size() > 1) svg.polyline(orbit, "stroke=\"" + colour + "\" stroke-width=\"1\" stroke-opacity=\"0.6\"");
    }
  }
  svg.axes(std::string(lateral ? "Lateral" : "Sagittal") + " phase portrait (grey straight, red steering, blue stop)",
           lateral ? "y - y_foot [m]" : "x - x_foot [m]", lateral ? "v_y [m/s]" : "v_x [m/s]");
  svg.save(path);
}

std::pair<double, double> unit(int fine_heading) {
  const double a = fine_heading * 22.5 * kDegree;
  return {std::sin(a), std::cos(a)};
}

void draw_grid(Svg& svg, const Environment& env) {
  const double cs = env.cell_size;
  for (int i = 0; i < env.cell_count(); ++i) {
    const Cell c = env.cell_at(i);
    std::string fill = env.obstacle_allowed(c) ? "#f4f4f4" : "#e6d5b8";
    if (env.floor[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] < 0 && env.obstacle_allowed(c)) {
      fill = "#e2e2ea";
    }
    if (!env.free(c)) fill = "#333";
    svg.rect(c.x * cs, c.y * cs, (c.x + 1) * cs, (c.y + 1) * cs, "fill=\"" + fill + "\" stroke=\"#bbb\"");
  }
  for (const Cell& g : env.goals) {
    svg.rect(g.x * cs + 0.1, g.y * cs + 0.1, (g.x + 1) * cs - 0.1, (g.y + 1) * cs - 0.1,
             "fill=\"none\" stroke=\"#2e8b57\" stroke-width=\"3\"");
  }
}

Bounds world_bounds(const Environment& env) {
  Bounds b;
  b.add(0, 0);
  b.add(env.width * env.cell_size, env.height * env.cell_size);
  return b;
}

void path_plot(const SimulationTrace& trace, const Environment& env, const std::string& path) {
  const Bounds b = world_bounds(env);
  Svg svg(2 * 25 + 28 * (b.x1 - b.x0), 2 * 25 + 28 * (b.y1 - b.y0) + 20, b, 25);
  draw_grid(svg, env);
  std::vector<std::pair<double, double>> com;
  for (const KeyframeRecord& k : trace.keyframes) {
    const Waypoint w = env.waypoint(k.fine.cell);
    const auto [fx, fy] = unit(k.fine.heading);
    const double rx = fy, ry = -fx;  // right of the heading
    const double ax = w.x + k.delta_y1 * rx, ay = w.y + k.delta_y1 * ry;
    com.emplace_back(ax, ay);
    const std::string colour = k.action.i_st == Stance::kLeft ? "#c0392b" : "#27ae60";
    svg.circle(ax - k.delta_y2 * rx, ay - k.delta_y2 * ry, 1.5, "fill=\"" + colour + "\"");
  }
  if (com.size() > 1) svg.polyline(com, "stroke=\"#2c6fbb\" stroke-width=\"1.5\"");
  std::vector<std::pair<double, double>> obstacle;
  for (const TickRecord& t : trace.ticks) {
    obstacle.emplace_back((t.obstacle.x + 0.5) * env.cell_size, (t.obstacle.y + 0.5) * env.cell_size);
  }
  if (obstacle.size() > 1) {
    svg.polyline(obstacle, "stroke=\"#e67e22\" stroke-width=\"2\" stroke-dasharray=\"6,3\"");
  }
  svg.text(25, 2 * 25 + 28 * (b.y1 - b.y0) + 10,
           "blue: CoM apexes, dots: footsteps (red left stance, green right), orange: obstacle", "start");
  svg.save(path);
}

void belief_snapshot(const SimulationTrace& trace, const Environment& env, const VisibilityTable& vis, int tick,
                     const std::string& path) {
  const auto it = std::find_if(trace.ticks.begin(), trace.ticks.end(), [&](const TickRecord& t) { return t.tick == tick; });
  if (it == trace.ticks.end()) throw DomainError("no tick " + std::to_string(tick) + " in the trace");
  const TickRecord& t = *it;
  const Bounds b = world_bounds(env);
  Svg svg(2 * 25 + 28 * (b.x1 - b.x0), 2 * 25 + 28 * (b.y1 - b.y0) + 20, b, 25);
  draw_grid(svg, env);
  const double cs = env.cell_size;
  for (int i = 0; i < env.cell_count(); ++i) {
    const Cell c = env.cell_at(i);
    if (vis(t.observer, c)) {
      svg.rect(c.x * cs, c.y * cs, (c.x + 1) * cs, (c.y + 1) * cs, "fill=\"#f7e98e\" fill-opacity=\"0.5\"");
    }
  }
  for (const Cell& c : belief_cells(t.belief, t.observer, env, vis)) {
    svg.rect(c.x * cs, c.y * cs, (c.x + 1) * cs, (c.y + 1) * cs, "fill=\"#8e44ad\" fill-opacity=\"0.35\"");
  }
  svg.circle((t.robot.x + 0.5) * cs, (t.robot.y + 0.5) * cs, 9, "fill=\"#2c6fbb\"");
  svg.circle((t.obstacle.x + 0.5) * cs, (t.obstacle.y + 0.5) * cs, 7, "fill=\"none\" stroke=\"#e67e22\" stroke-width=\"3\"");
  svg.text(25, 2 * 25 + 28 * (b.y1 - b.y0) + 10,
           "tick " + std::to_string(tick) + ", belief " + to_string(t.belief) +
               ": yellow visible, purple belief, blue robot, orange obstacle",
           "start");
  svg.save(path);
}

}  // namespace

PortraitCheck check_portraits(const std::vector<StepPlan>& steps, double tol) {
  PortraitCheck check;
  check.worst_sagittal = std::numeric_limits<double>::infinity();
  check.worst_lateral = -std::numeric_limits<double>::infinity();
  for (const StepPlan& s : steps) {
    for (const TrajectorySegment& seg : s.trajectory.segments) {
      const double sag = first_integral_of(seg.sagittal, s.trajectory.omega);
      const double lat = first_integral_of(seg.lateral, s.trajectory.omega);
      ++check.segments;
      check.worst_sagittal = std::min(check.worst_sagittal, sag);
      check.worst_lateral = std::max(check.worst_lateral, lat);
      if (sag < -tol || lat > tol) ++check.outside;
    }
  }
  return check;
}

std::vector<std::string> emit_figures(const SimulationTrace& trace, const Environment& env, const std::string& dir,
                                      std::vector<int> belief_ticks) {
  if (trace.ticks.empty()) throw DomainError("cannot draw an empty trace");
  if (trace.steps.empty()) throw DomainError("the trace has no recorded trajectories");
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  std::vector<std::string> files;
  auto add = [&](const std::string& name) { return files.emplace_back((d / name).string()); };
  portrait(trace, false, add("sagittal.svg"));
  portrait(trace, true, add("lateral.svg"));
  path_plot(trace, env, add("path.svg"));
  if (belief_ticks.empty()) {
    belief_ticks = {trace.ticks.front().tick, trace.ticks[trace.ticks.size() / 2].tick, trace.ticks.back().tick};
  }
  const VisibilityTable vis(env);
  for (int t : belief_ticks) belief_snapshot(trace, env, vis, t, add("belief_" + std::to_string(t) + ".svg"));
  return files;
}

}  // namespace safenav
