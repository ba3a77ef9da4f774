#pragma once

// Explicit-state two-player games with GR(1) winning conditions.
//
// A round from state s: the environment picks one of its options at s, then
// the system picks a successor listed under that option. Options and edges
// are stored in compressed rows. Safety is a state invariant plus per-edge
// and per-option admissibility masks; liveness is a list of recurrence sets
// for each player.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace safenav {

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(int size, bool value = false);

  int size() const { return size_; }
  bool test(int i) const { return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u; }
  void set(int i) { words_[static_cast<std::size_t>(i) >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(int i) { words_[static_cast<std::size_t>(i) >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  int count() const;
  bool any() const;
  bool subset_of(const Bitset& other) const;

  Bitset& operator&=(const Bitset& other);
  Bitset& operator|=(const Bitset& other);
  // this &= ~other
  Bitset& subtract(const Bitset& other);
  Bitset complement() const;
  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }
  friend bool operator==(const Bitset&, const Bitset&) = default;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int b = __builtin_ctzll(bits);
        f(static_cast<int>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

 private:
  void trim();

  int size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct GameStructure {
  int num_states = 0;
  int initial = 0;
  std::vector<int> env_begin;   // num_states + 1 offsets into options
  std::vector<int> sys_begin;   // options + 1 offsets into sys_target
  std::vector<int> sys_target;
  // Optional labels used by exports and reports.
  std::function<std::string(int)> describe_state;

  int num_options() const { return static_cast<int>(sys_begin.size()) - 1; }
  int num_edges() const { return static_cast<int>(sys_target.size()); }
  std::string state_name(int s) const;
  // Throws GameBuildError unless every state has an environment option and
  // every option has a system successor.
  void validate() const;
};

class GameBuilder {
 public:
  // States must be opened in index order 0, 1, 2, ...
  void open_state();
  void open_option();
  void add_move(int target);
  GameStructure finish(int initial);

 private:
  GameStructure game_;
};

struct GR1Spec {
  Bitset sys_safe;                          // empty: every state is safe
  std::vector<std::uint8_t> sys_edge_ok;    // empty: every edge allowed
  std::vector<std::uint8_t> env_option_ok;  // empty: every option allowed
  std::vector<Bitset> env_liveness;         // empty: no assumption
  std::vector<Bitset> sys_liveness;         // at least one goal
  std::vector<std::string> sys_liveness_names;

  bool safe(int s) const { return sys_safe.size() == 0 || sys_safe.test(s); }
  bool edge_ok(int e) const { return sys_edge_ok.empty() || sys_edge_ok[static_cast<std::size_t>(e)]; }
  bool option_ok(int o) const {
    return env_option_ok.empty() || env_option_ok[static_cast<std::size_t>(o)];
  }
};

inline constexpr int kNoRank = 1 << 30;

// Finite-memory strategy: the memory is the index of the system goal being
// pursued. At a state in the pursued goal the memory advances after the move.
struct Strategy {
  int goals = 0;
  int initial_memory = 0;
  Bitset winning;
  // choice[j][option]: sys edge index, or -1 outside the winning region.
  std::vector<std::vector<int>> choice;
  // rank[j][s]: layer * env_goals + env_index of the first fixpoint layer
  // holding s; goal j states have rank 0.
  std::vector<std::vector<int>> rank;

  // Chosen edge, or nullopt outside the winning region.
  std::optional<int> edge(int memory, int option) const;
  // Target state of the chosen edge.
  std::optional<int> move(const GameStructure& game, int memory, int option) const;
  int next_memory(const GR1Spec& spec, int state, int memory) const;
};

struct SolveResult {
  bool realizable = false;
  Strategy strategy;
};

// Three-nested fixpoint. Within the winning region the strategy picks, for
// every environment option, the admissible successor of lowest rank, then
// lowest index. A state with no admissible environment option is won by the
// system.
SolveResult solve_gr1(const GameStructure& game, const GR1Spec& spec);

struct Violation {
  enum class Kind { kClosure, kSafety, kLiveness } kind;
  std::string detail;
  // Play prefix (state, memory) leading to the violation.
  std::vector<std::pair<int, int>> witness;
};

struct CheckReport {
  int explored = 0;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Explores every play consistent with the strategy from the initial state.
// Reports undefined moves, unsafe or inadmissible moves, and reachable cycles
// that satisfy every environment goal while missing a system goal. Witness
// prefixes are cut to max_lasso entries.
CheckReport check_strategy(const GameStructure& game, const GR1Spec& spec,
                           const Strategy& strategy, int max_lasso = 64);

// Upper bound on rounds between consecutive goal visits for plays in which
// the environment meets each of its goals within `env_patience` rounds.
long long liveness_bound(const Strategy& strategy, int env_goals, int env_patience);

// Line-oriented text export: header, then one line per defined move.
std::string export_strategy(const GameStructure& game, const Strategy& strategy,
                            const std::string& title);

}  // namespace safenav
