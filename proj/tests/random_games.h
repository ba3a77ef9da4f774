#pragma once

// Seeded random GR(1) games for solver tests.

#include <algorithm>
#include <random>

#include "safenav/game.h"

namespace safenav::testing {

struct RandomInstance {
  GameStructure game;
  GR1Spec spec;
};

inline Bitset random_set(std::mt19937& rng, int n, double p) {
  std::bernoulli_distribution pick(p);
  Bitset b(n);
  for (int s = 0; s < n; ++s) {
    if (pick(rng)) b.set(s);
  }
  return b;
}

inline RandomInstance random_instance(unsigned seed) {
  std::mt19937 rng(seed);
  const int n = std::uniform_int_distribution<int>(5, 200)(rng);
  std::uniform_int_distribution<int> fan(1, 3), state(0, n - 1);
  std::bernoulli_distribution local(0.7);
  GameBuilder b;
  for (int s = 0; s < n; ++s) {
    b.open_state();
    const int options = fan(rng);
    for (int o = 0; o < options; ++o) {
      b.open_option();
      const int moves = fan(rng);
      for (int k = 0; k < moves; ++k) {
        // Mostly local edges so that goals are reachable but not trivially.
        const int t = local(rng) ? std::clamp(s + std::uniform_int_distribution<int>(-3, 3)(rng), 0, n - 1) : state(rng);
        b.add_move(t);
      }
    }
  }
  RandomInstance r;
  r.game = b.finish(0);
  r.spec.sys_safe = random_set(rng, n, 0.9);
  std::bernoulli_distribution keep(0.9);
  for (int e = 0; e < r.game.num_edges(); ++e) r.spec.sys_edge_ok.push_back(keep(rng));
  for (int o = 0; o < r.game.num_options(); ++o) r.spec.env_option_ok.push_back(keep(rng) || keep(rng));
  const int ne = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int i = 0; i < ne; ++i) r.spec.env_liveness.push_back(random_set(rng, n, 0.3));
  const int ns = std::uniform_int_distribution<int>(1, 2)(rng);
  for (int j = 0; j < ns; ++j) r.spec.sys_liveness.push_back(random_set(rng, n, 0.15));
  return r;
}

}  // namespace safenav::testing
