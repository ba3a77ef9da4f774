#include "safenav/game.h"

#include <algorithm>
#include <sstream>

#include "safenav/errors.h"

namespace safenav {

// ---------------------------------------------------------------- Bitset

Bitset::Bitset(int size, bool value)
    : size_(size), words_((static_cast<std::size_t>(size) + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  trim();
}

void Bitset::trim() {
  if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
}

int Bitset::count() const {
  int n = 0;
  for (std::uint64_t w : words_) n += __builtin_popcountll(w);
  return n;
}

bool Bitset::any() const {
  return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

bool Bitset::subset_of(const Bitset& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & ~other.words_[i]) return false;
  }
  return true;
}

Bitset& Bitset::operator&=(const Bitset& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
  return *this;
}

Bitset& Bitset::operator|=(const Bitset& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

Bitset& Bitset::subtract(const Bitset& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
  return *this;
}

Bitset Bitset::complement() const {
  Bitset out = *this;
  for (auto& w : out.words_) w = ~w;
  out.trim();
  return out;
}

// ------------------------------------------------------- GameStructure

std::string GameStructure::state_name(int s) const {
  return describe_state ? describe_state(s) : std::to_string(s);
}

void GameStructure::validate() const {
  if (num_states <= 0) throw GameBuildError("game has no states");
  if (static_cast<int>(env_begin.size()) != num_states + 1 || sys_begin.empty() ||
      env_begin.back() != num_options() || sys_begin.back() != num_edges()) {
    throw GameBuildError("inconsistent offsets");
  }
  if (initial < 0 || initial >= num_states) throw GameBuildError("initial state out of range");
  for (int s = 0; s < num_states; ++s) {
    if (env_begin[static_cast<std::size_t>(s)] == env_begin[static_cast<std::size_t>(s) + 1]) {
      throw GameBuildError("state " + state_name(s) + " has no environment move");
    }
  }
  for (int o = 0; o < num_options(); ++o) {
    if (sys_begin[static_cast<std::size_t>(o)] == sys_begin[static_cast<std::size_t>(o) + 1]) {
      throw GameBuildError("environment option " + std::to_string(o) + " leaves the system stuck");
    }
  }
  for (int t : sys_target) {
    if (t < 0 || t >= num_states) throw GameBuildError("successor out of range");
  }
}

void GameBuilder::open_state() {
  game_.env_begin.push_back(static_cast<int>(game_.sys_begin.size()));
  ++game_.num_states;
}

void GameBuilder::open_option() {
  if (game_.env_begin.empty()) throw GameBuildError("option opened before any state");
  game_.sys_begin.push_back(static_cast<int>(game_.sys_target.size()));
}

void GameBuilder::add_move(int target) {
  if (game_.sys_begin.empty()) throw GameBuildError("move added before any option");
  game_.sys_target.push_back(target);
}

GameStructure GameBuilder::finish(int initial) {
  GameStructure g = std::move(game_);
  game_ = {};
  g.sys_begin.push_back(static_cast<int>(g.sys_target.size()));
  g.env_begin.push_back(g.num_options());
  g.initial = initial;
  g.validate();
  return g;
}

// -------------------------------------------------------------- solver

namespace {

struct Solver {
  const GameStructure& g;
  const GR1Spec& spec;

  // States in `domain` where every admissible option has an admissible
  // successor in `target`.
  Bitset cpre(const Bitset& target, const Bitset& domain) const {
    Bitset out(g.num_states);
    domain.for_each([&](int s) {
      for (int o = g.env_begin[static_cast<std::size_t>(s)]; o < g.env_begin[static_cast<std::size_t>(s) + 1]; ++o) {
        if (!spec.option_ok(o)) continue;
        bool found = false;
        for (int e = g.sys_begin[static_cast<std::size_t>(o)]; e < g.sys_begin[static_cast<std::size_t>(o) + 1]; ++e) {
          if (spec.edge_ok(e) && target.test(g.sys_target[static_cast<std::size_t>(e)])) {
            found = true;
            break;
          }
        }
        if (!found) return;
      }
      out.set(s);
    });
    return out;
  }

  int env_goals() const { return std::max<int>(1, static_cast<int>(spec.env_liveness.size())); }

  Bitset env_goal(int i) const {
    if (spec.env_liveness.empty()) return Bitset(g.num_states, true);
    return spec.env_liveness[static_cast<std::size_t>(i)];
  }

  // Least fixpoint for goal j inside z. Fills rank when requested.
  Bitset reach(int j, const Bitset& z, std::vector<int>* rank) const {
    const Bitset start = spec.sys_liveness[static_cast<std::size_t>(j)] & cpre(z, z);
    if (rank) {
      rank->assign(static_cast<std::size_t>(g.num_states), kNoRank);
      start.for_each([&](int s) { (*rank)[static_cast<std::size_t>(s)] = 0; });
    }
    Bitset y(g.num_states);
    const int ne = env_goals();
    for (int layer = 0;; ++layer) {
      const Bitset base = start | cpre(y, z);
      Bitset next = base;
      for (int i = 0; i < ne; ++i) {
        const Bitset waiting = env_goal(i).complement() & z;
        Bitset x = z;
        for (;;) {
          Bitset nx = base | cpre(x, waiting);
          if (nx == x) break;
          x = std::move(nx);
        }
        if (rank) {
          const int r = layer * ne + i;
          x.for_each([&](int s) {
            auto& slot = (*rank)[static_cast<std::size_t>(s)];
            if (slot > r) slot = r;
          });
        }
        next |= x;
      }
      if (next == y) return y;
      y = std::move(next);
    }
  }
};

}  // namespace

std::optional<int> Strategy::edge(int memory, int option) const {
  const int e = choice[static_cast<std::size_t>(memory)][static_cast<std::size_t>(option)];
  if (e < 0) return std::nullopt;
  return e;
}

std::optional<int> Strategy::move(const GameStructure& game, int memory, int option) const {
  const auto e = edge(memory, option);
  if (!e) return std::nullopt;
  return game.sys_target[static_cast<std::size_t>(*e)];
}

int Strategy::next_memory(const GR1Spec& spec, int state, int memory) const {
  return spec.sys_liveness[static_cast<std::size_t>(memory)].test(state) ? (memory + 1) % goals : memory;
}

SolveResult solve_gr1(const GameStructure& game, const GR1Spec& spec) {
  game.validate();
  if (spec.sys_liveness.empty()) throw GameBuildError("specification has no system goal");
  const Solver solver{game, spec};
  const int m = static_cast<int>(spec.sys_liveness.size());

  Bitset z = spec.sys_safe.size() == 0 ? Bitset(game.num_states, true) : spec.sys_safe;
  for (;;) {
    Bitset before = z;
    for (int j = 0; j < m; ++j) z = solver.reach(j, z, nullptr);
    if (z == before) break;
  }

  SolveResult result;
  Strategy& st = result.strategy;
  st.goals = m;
  st.winning = z;
  st.rank.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) solver.reach(j, z, &st.rank[static_cast<std::size_t>(j)]);
  st.choice.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(game.num_options()), -1));
  for (int j = 0; j < m; ++j) {
    z.for_each([&](int s) {
      const int jr = spec.sys_liveness[static_cast<std::size_t>(j)].test(s) ? (j + 1) % m : j;
      const auto& rank = st.rank[static_cast<std::size_t>(jr)];
      for (int o = game.env_begin[static_cast<std::size_t>(s)]; o < game.env_begin[static_cast<std::size_t>(s) + 1]; ++o) {
        if (!spec.option_ok(o)) continue;
        int best = -1;
        for (int e = game.sys_begin[static_cast<std::size_t>(o)]; e < game.sys_begin[static_cast<std::size_t>(o) + 1]; ++e) {
          const int t = game.sys_target[static_cast<std::size_t>(e)];
          if (!spec.edge_ok(e) || !z.test(t)) continue;
          if (best < 0) {
            best = e;
            continue;
          }
          const int bt = game.sys_target[static_cast<std::size_t>(best)];
          const auto key = std::pair{rank[static_cast<std::size_t>(t)], t};
          const auto best_key = std::pair{rank[static_cast<std::size_t>(bt)], bt};
          if (key < best_key) best = e;
        }
        st.choice[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)] = best;
      }
    });
  }
  result.realizable = z.test(game.initial);
  return result;
}

// ------------------------------------------------------------- checking

namespace {

struct ProductGraph {
  std::vector<int> begin;
  std::vector<int> next;
};

// Iterative Tarjan over the nodes selected by `keep`.
std::vector<std::vector<int>> components(const ProductGraph& graph, const std::vector<std::uint8_t>& keep) {
  const int n = static_cast<int>(keep.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<std::uint8_t> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::pair<int, int>> call;
  std::vector<std::vector<int>> out;
  int counter = 0;
  for (int root = 0; root < n; ++root) {
    if (!keep[static_cast<std::size_t>(root)] || index[static_cast<std::size_t>(root)] >= 0) continue;
    call.push_back({root, graph.begin[static_cast<std::size_t>(root)]});
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      auto& [v, it] = call.back();
      if (it < graph.begin[static_cast<std::size_t>(v) + 1]) {
        const int w = graph.next[static_cast<std::size_t>(it++)];
        if (!keep[static_cast<std::size_t>(w)]) continue;
        if (index[static_cast<std::size_t>(w)] < 0) {
          index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = 1;
          call.push_back({w, graph.begin[static_cast<std::size_t>(w)]});
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
        }
        continue;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[static_cast<std::size_t>(parent)] = std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(done)]);
      }
      if (low[static_cast<std::size_t>(done)] == index[static_cast<std::size_t>(done)]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          comp.push_back(w);
        } while (w != done);
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

}  // namespace

CheckReport check_strategy(const GameStructure& game, const GR1Spec& spec, const Strategy& strategy,
                           int max_lasso) {
  CheckReport report;
  const int m = strategy.goals;
  auto node_of = [m](int s, int j) { return s * m + j; };
  const int total = game.num_states * m;
  std::vector<int> parent(static_cast<std::size_t>(total), -2);
  auto witness = [&](int node) {
    std::vector<std::pair<int, int>> path;
    for (int v = node; v >= 0; v = parent[static_cast<std::size_t>(v)]) path.push_back({v / m, v % m});
    std::reverse(path.begin(), path.end());
    if (static_cast<int>(path.size()) > max_lasso) path.erase(path.begin(), path.end() - max_lasso);
    return path;
  };
  auto fail = [&](Violation::Kind kind, std::string detail, int node) {
    report.violations.push_back({kind, std::move(detail), witness(node)});
  };

  const int start = node_of(game.initial, strategy.initial_memory);
  parent[static_cast<std::size_t>(start)] = -1;
  if (!spec.safe(game.initial)) {
    fail(Violation::Kind::kSafety, "initial state " + game.state_name(game.initial) + " is unsafe", start);
    return report;
  }

  std::vector<std::vector<int>> succ(static_cast<std::size_t>(total));
  std::vector<int> order{start};
  for (std::size_t q = 0; q < order.size(); ++q) {
    const int v = order[q];
    const int s = v / m, j = v % m;
    const int jn = strategy.next_memory(spec, s, j);
    for (int o = game.env_begin[static_cast<std::size_t>(s)]; o < game.env_begin[static_cast<std::size_t>(s) + 1]; ++o) {
      if (!spec.option_ok(o)) continue;
      const int e = strategy.choice[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)];
      const std::string where = game.state_name(s) + " goal " + std::to_string(j) + " option " +
                                std::to_string(o - game.env_begin[static_cast<std::size_t>(s)]);
      if (e < 0) {
        fail(Violation::Kind::kClosure, "no move at " + where, v);
        continue;
      }
      if (e < game.sys_begin[static_cast<std::size_t>(o)] || e >= game.sys_begin[static_cast<std::size_t>(o) + 1]) {
        fail(Violation::Kind::kSafety, "move at " + where + " is not a successor of the option", v);
        continue;
      }
      const int t = game.sys_target[static_cast<std::size_t>(e)];
      if (!spec.edge_ok(e) || !spec.safe(t)) {
        fail(Violation::Kind::kSafety, "unsafe move at " + where + " to " + game.state_name(t), v);
        continue;
      }
      const int w = node_of(t, jn);
      succ[static_cast<std::size_t>(v)].push_back(w);
      if (parent[static_cast<std::size_t>(w)] == -2) {
        parent[static_cast<std::size_t>(w)] = v;
        order.push_back(w);
      }
    }
  }
  report.explored = static_cast<int>(order.size());

  ProductGraph graph;
  graph.begin.assign(static_cast<std::size_t>(total) + 1, 0);
  for (int v = 0; v < total; ++v) {
    graph.begin[static_cast<std::size_t>(v) + 1] =
        graph.begin[static_cast<std::size_t>(v)] + static_cast<int>(succ[static_cast<std::size_t>(v)].size());
  }
  for (const auto& row : succ) graph.next.insert(graph.next.end(), row.begin(), row.end());

  std::vector<std::uint8_t> reached(static_cast<std::size_t>(total), 0);
  for (int v : order) reached[static_cast<std::size_t>(v)] = 1;

  const int ne = static_cast<int>(spec.env_liveness.size());
  auto cyclic = [&](const std::vector<int>& comp, const std::vector<std::uint8_t>& keep) {
    if (comp.size() > 1) return true;
    const int v = comp[0];
    for (int it = graph.begin[static_cast<std::size_t>(v)]; it < graph.begin[static_cast<std::size_t>(v) + 1]; ++it) {
      if (graph.next[static_cast<std::size_t>(it)] == v && keep[static_cast<std::size_t>(v)]) return true;
    }
    return false;
  };
  auto covers_env = [&](const std::vector<int>& comp) {
    for (int i = 0; i < ne; ++i) {
      const bool hit = std::any_of(comp.begin(), comp.end(),
                                   [&](int v) { return spec.env_liveness[static_cast<std::size_t>(i)].test(v / m); });
      if (!hit) return false;
    }
    return true;
  };
  auto misses_goal = [&](const std::vector<int>& comp, int k) {
    return std::none_of(comp.begin(), comp.end(),
                        [&](int v) { return spec.sys_liveness[static_cast<std::size_t>(k)].test(v / m); });
  };

  for (const auto& comp : components(graph, reached)) {
    if (!cyclic(comp, reached) || !covers_env(comp)) continue;
    for (int k = 0; k < m; ++k) {
      std::vector<std::uint8_t> keep(static_cast<std::size_t>(total), 0);
      for (int v : comp) {
        if (!spec.sys_liveness[static_cast<std::size_t>(k)].test(v / m)) keep[static_cast<std::size_t>(v)] = 1;
      }
      bool bad = false;
      int at = -1;
      if (misses_goal(comp, k)) {
        bad = true;
        at = comp[0];
      } else {
        for (const auto& sub : components(graph, keep)) {
          if (cyclic(sub, keep) && covers_env(sub)) {
            bad = true;
            at = sub[0];
            break;
          }
        }
      }
      if (bad) {
        const std::string name = k < static_cast<int>(spec.sys_liveness_names.size())
                                     ? spec.sys_liveness_names[static_cast<std::size_t>(k)]
                                     : "goal " + std::to_string(k);
        fail(Violation::Kind::kLiveness, "fair cycle through " + game.state_name(at / m) + " never reaches " + name, at);
        break;
      }
    }
  }
  return report;
}

long long liveness_bound(const Strategy& strategy, int env_goals, int env_patience) {
  const int ne = std::max(1, env_goals);
  long long total = 0;
  for (const auto& rank : strategy.rank) {
    int worst = 0;
    strategy.winning.for_each([&](int s) { worst = std::max(worst, rank[static_cast<std::size_t>(s)]); });
    const long long layers = worst / ne + 1;
    total += layers * (static_cast<long long>(ne) * env_patience + 1) + 1;
  }
  return total;
}

std::string export_strategy(const GameStructure& game, const Strategy& strategy, const std::string& title) {
  std::ostringstream out;
  out << "safenav-strategy/1\n";
  out << "title " << title << "\n";
  out << "states " << game.num_states << " goals " << strategy.goals << " winning " << strategy.winning.count()
      << "\n";
  out << "initial " << game.state_name(game.initial) << " memory " << strategy.initial_memory << "\n";
  for (int s = 0; s < game.num_states; ++s) {
    if (!strategy.winning.test(s)) continue;
    const std::string name = game.state_name(s);
    for (int j = 0; j < strategy.goals; ++j) {
      for (int o = game.env_begin[static_cast<std::size_t>(s)]; o < game.env_begin[static_cast<std::size_t>(s) + 1]; ++o) {
        const int e = strategy.choice[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)];
        if (e < 0) continue;
        out << name << " | goal " << j << " | option " << o - game.env_begin[static_cast<std::size_t>(s)]
            << " | rank " << strategy.rank[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)] << " -> "
            << game.state_name(game.sys_target[static_cast<std::size_t>(e)]) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace safenav
