#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "safenav/errors.h"
#include "safenav/figures.h"
#include "safenav/safety_criteria.h"
#include "safenav/session.h"
#include "safenav/simulation.h"

namespace {

using namespace safenav;

constexpr double kDegree = 3.14159265358979323846 / 180.0;

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  return out;
}

int synthesize(const std::string& env_path, const std::string& out_path, bool single, bool full_view) {
  Environment env = load_environment_file(env_path);
  if (single) env = with_single_partition(env);
  const auto start = std::chrono::steady_clock::now();
  const NavigationGame ng = full_view ? encode_navigation_game(env) : build_belief_game(env);
  const SolveResult r = solve_gr1(ng.game, ng.spec);
  std::cout << env.name << ": " << ng.game.num_states << " states, " << ng.game.sys_target.size() << " moves, "
            << (r.realizable ? "realizable" : "unrealizable") << ", winning " << r.strategy.winning.count() << ", "
            << seconds_since(start) << " s\n";
  if (!r.realizable) return 2;
  if (!out_path.empty()) open_out(out_path) << export_strategy(ng.game, r.strategy, env.name + " navigation");
  return 0;
}

std::vector<Cell> read_path(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path);
  std::vector<Cell> cells;
  Cell c;
  while (in >> c.x >> c.y) cells.push_back(c);
  return cells;
}

struct SimulateArgs {
  std::string env;
  std::string obstacle = "random";
  std::string path;
  unsigned seed = 0;
  int episodes = 1;
  int max_ticks = 10000;
  int stall_bound = 10;
  std::string trace;
  std::string belief_trace;
  std::string figures;
};

int simulate(const SimulateArgs& a) {
  const auto planner = std::make_shared<const Planner>(load_environment_file(a.env));
  EpisodeConfig config;
  config.max_ticks = a.max_ticks;
  config.stall_bound = a.stall_bound;
  config.record_trajectories = !a.figures.empty();
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < a.episodes; ++i) {
    const unsigned seed = a.seed + static_cast<unsigned>(i);
    std::unique_ptr<ObstacleModel> model;
    if (a.obstacle == "scripted") {
      model = scripted_obstacle(a.path.empty() ? std::vector<Cell>{} : read_path(a.path));
    } else if (a.obstacle == "adversarial") {
      model = adversarial_obstacle(seed);
    } else {
      model = random_obstacle(seed);
    }
    const SimulationTrace t = run_episode(planner, *model, config);
    const Outcome& o = t.outcome;
    failed += !o.accepted();
    std::cout << "seed " << seed << " " << model->name() << ": ticks " << o.ticks << ", goals " << o.goal_visits[0]
              << "/" << o.goal_visits[1] << ", collisions " << o.collisions << ", safety violations "
              << o.safety_violations << ", belief failures " << o.belief_failures << ", env loss "
              << (o.env_loss ? "yes" : "no") << ", max goal gap " << o.max_goal_gap << " (bound "
              << o.liveness_bound << ")" << (o.aborted.empty() ? "" : ", aborted: " + o.aborted) << "\n";
    if (i + 1 == a.episodes) {
      if (!a.trace.empty()) {
        std::ofstream out = open_out(a.trace);
        write_trace(out, t);
      }
      if (!a.belief_trace.empty()) {
        std::ofstream out = open_out(a.belief_trace);
        write_belief_trace(out, t, planner->env());
      }
      if (!a.figures.empty()) {
        for (const std::string& f : emit_figures(t, planner->env(), a.figures)) std::cout << "wrote " << f << "\n";
        const PortraitCheck c = check_portraits(t.steps);
        std::cout << "phase portraits: " << c.segments << " segments, " << c.outside << " outside the safety region\n";
      }
    }
  }
  std::cout << a.episodes - failed << "/" << a.episodes << " accepted in " << seconds_since(start) << " s\n";
  return failed == 0 ? 0 : 1;
}

int viability_map(const std::vector<double>& ds, const std::vector<double>& dthetas, double resolution,
                  double v_max, const std::string& out_path) {
  PolicyConfig config;
  if (v_max > 0) config.map_v = {0.0, v_max};
  std::vector<Action> actions;
  for (double d : ds) {
    for (double th : dthetas) {
      Action a;
      a.d = d;
      a.delta_theta = th * kDegree;
      actions.push_back(a);
    }
  }
  const ViabilityMap map = build_viability_map(config, actions, resolution);
  if (out_path.empty()) {
    write_viability_map_csv(std::cout, map);
  } else {
    std::ofstream out = open_out(out_path);
    write_viability_map_csv(out, map);
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    std::cerr << "d " << actions[i].d << " dtheta " << actions[i].delta_theta / kDegree << ": "
              << map.viable_count(i) << " viable of " << map.v_axis.size() * map.dy2_axis.size() << "\n";
  }
  return 0;
}

// One transition per line: v_c v_n d dtheta_deg dy2 h_apex (spaces or commas).
int check(std::istream& in) {
  std::string line;
  int n = 0, unsafe = 0;
  std::cout << "line,safe,rule,margin\n";
  while (std::getline(in, line)) {
    ++n;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    double v_c, v_n, d, dtheta, dy2, h;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#') {
      continue;
    }
    if (!(fields >> v_c >> v_n >> d >> dtheta >> dy2 >> h)) {
      std::cout << n << ",error,malformed record,\n";
      ++unsafe;
      continue;
    }
    try {
      const PendulumParams p = PendulumParams::make(kGravity, h);
      Action a;
      a.d = d;
      a.delta_theta = dtheta * kDegree;
      const SafetyVerdict v = check_balancing_safety({v_c, h}, a, {v_n, h}, {dy2, a.delta_theta, d}, p.omega);
      std::cout << n << "," << (v.safe ? "safe" : "unsafe") << "," << to_string(v.violated_rule) << "," << v.margin
                << "\n";
      unsafe += !v.safe;
    } catch (const std::exception& e) {
      std::cout << n << ",error," << e.what() << ",\n";
      ++unsafe;
    }
  }
  return unsafe == 0 ? 0 : 1;
}

int serve(const std::string& env_path, int port, int timeout_ms, unsigned seed, int max_ticks) {
  const auto planner = std::make_shared<const Planner>(load_environment_file(env_path));
  SessionOptions options;
  options.seed = seed;
  options.timeout_ms = timeout_ms;
  options.episode.max_ticks = max_ticks;
  Server server(planner, options, port, "0.0.0.0");
  std::cout << "serving " << planner->env().name << " on port " << server.port() << std::endl;
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe navigation planning for a walking robot among a dynamic obstacle"};
  app.require_subcommand(1);
  const std::string default_env = std::string(SAFENAV_DATA_DIR) + "/paper_world.json";

  auto* syn = app.add_subcommand("synthesize", "Solve the navigation game and export the strategy");
  std::string syn_env = default_env, syn_out;
  bool single = false, full_view = false;
  syn->add_option("--env", syn_env, "Environment file")->check(CLI::ExistingFile);
  syn->add_option("--out", syn_out, "Strategy output file");
  syn->add_flag("--single-partition", single, "Merge all partitions (obstacle anywhere unseen)");
  syn->add_flag("--full-view", full_view, "Assume the obstacle is always visible");

  auto* sim = app.add_subcommand("simulate", "Run closed-loop episodes");
  SimulateArgs sa;
  sa.env = default_env;
  sim->add_option("--env", sa.env, "Environment file")->check(CLI::ExistingFile);
  sim->add_option("--obstacle", sa.obstacle, "Obstacle model")
      ->check(CLI::IsMember({"scripted", "random", "adversarial"}));
  sim->add_option("--path", sa.path, "Scripted obstacle path, one 'x y' per line")->check(CLI::ExistingFile);
  sim->add_option("--seed", sa.seed, "Seed of the first episode");
  sim->add_option("--episodes", sa.episodes, "Number of episodes (consecutive seeds)")->check(CLI::PositiveNumber);
  sim->add_option("--max-ticks", sa.max_ticks, "Tick limit per episode");
  sim->add_option("--stall-bound", sa.stall_bound, "Ticks the obstacle may stay in the robot's way");
  sim->add_option("--trace", sa.trace, "Trace output (JSON lines) of the last episode");
  sim->add_option("--belief-trace", sa.belief_trace, "Belief trace output of the last episode");
  sim->add_option("--figures", sa.figures, "Directory for SVG figures of the last episode");

  auto* vm = app.add_subcommand("viability-map", "Sample keyframe transitions as CSV");
  std::vector<double> ds{0.3, 0.4}, dthetas{0.0, 22.5, 45.0};
  double resolution = 0.01, v_max = 0.0;
  std::string vm_out;
  vm->add_option("--d", ds, "Step lengths [m]");
  vm->add_option("--dtheta", dthetas, "Heading changes [deg]");
  vm->add_option("--resolution", resolution, "Grid resolution");
  vm->add_option("--v-max", v_max, "Upper end of the sampled apex velocity window");
  vm->add_option("--out", vm_out, "CSV output (default stdout)");

  auto* chk = app.add_subcommand("check", "Check keyframe transitions: v_c v_n d dtheta_deg dy2 h_apex");
  std::string chk_in;
  chk->add_option("--in", chk_in, "Input file (default stdin)")->check(CLI::ExistingFile);

  auto* srv = app.add_subcommand("serve", "Serve obstacle sessions over TCP");
  std::string srv_env = default_env;
  int port = 7878, timeout_ms = 30000, srv_ticks = 10000;
  unsigned srv_seed = 0;
  srv->add_option("--env", srv_env, "Environment file")->check(CLI::ExistingFile);
  srv->add_option("--port", port, "TCP port");
  srv->add_option("--timeout-ms", timeout_ms, "Deadline for a remote move");
  srv->add_option("--seed", srv_seed, "Seed for fallback moves");
  srv->add_option("--max-ticks", srv_ticks, "Tick limit per session");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*syn) return synthesize(syn_env, syn_out, single, full_view);
    if (*sim) return simulate(sa);
    if (*vm) return viability_map(ds, dthetas, resolution, v_max, vm_out);
    if (*chk) {
      if (chk_in.empty()) return check(std::cin);
      std::ifstream in(chk_in);
      return check(in);
    }
    if (*srv) return serve(srv_env, port, timeout_ms, srv_seed, srv_ticks);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
