#pragma once

#include <cstdint>
#include <vector>

#include "optail/mdp.hpp"
#include "optail/rng.hpp"
#include "optail/simulator.hpp"

namespace testing {

using namespace optail;

/// Random garnet with 2..max_s states, 1..max_a actions, 1..max_h steps.
inline TabularMdp random_garnet(SplitMix64& rng, int max_s, int max_a, int max_h) {
  EnvSpec spec;
  spec.family = EnvFamily::garnet_random;
  spec.num_states = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_s - 1)));
  spec.num_actions = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_a)));
  spec.horizon = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_h)));
  spec.branching = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_states)));
  spec.seed = rng();
  return instantiate(spec);
}

inline RewardTable random_reward(const Shape& shape, SplitMix64& rng) {
  RewardTable r(shape);
  for (auto& v : r.values) v = rng.uniform();
  return r;
}

inline Policy random_policy(const Shape& shape, SplitMix64& rng) {
  std::vector<double> p(shape.cells());
  for (int h = 0; h < shape.horizon; ++h) {
    for (int s = 0; s < shape.num_states; ++s) {
      double total = 0.0;
      for (int a = 0; a < shape.num_actions; ++a) total += p[shape.index(h, s, a)] = rng.exponential();
      for (int a = 0; a < shape.num_actions; ++a) p[shape.index(h, s, a)] /= total;
    }
  }
  return Policy::stochastic(shape, std::move(p));
}

inline Policy random_deterministic(const Shape& shape, SplitMix64& rng) {
  std::vector<int> actions(static_cast<std::size_t>(shape.horizon) * shape.num_states);
  for (auto& a : actions) a = static_cast<int>(rng.below(static_cast<std::uint64_t>(shape.num_actions)));
  return Policy::deterministic(shape, actions);
}

/// One state, H=1, rewards given per action.
inline TabularMdp bandit(std::vector<double> rewards) {
  const Shape shp{1, 1, static_cast<int>(rewards.size())};
  RewardTable r(shp);
  r.values = std::move(rewards);
  return make_mdp(shp, 0, std::vector<double>(shp.cells(), 1.0), std::move(r));
}

/// Deterministic MDP: next state (s + a) mod S, reward table given.
inline TabularMdp shift_chain(int H, int S, int A, const RewardTable& reward) {
  const Shape shp{H, S, A};
  std::vector<double> p(shp.cells() * S, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) p[shp.index(h, s, a) * S + (s + a) % S] = 1.0;
    }
  }
  return make_mdp(shp, 0, std::move(p), reward);
}

}  // namespace testing
