#pragma once

// Benchmark environments, seeded rollouts, and expert demonstrations.

#include <cstdint>
#include <string>
#include <utility>

#include "optail/mdp.hpp"

namespace optail {

enum class EnvFamily { gridworld, combination_lock, cliff, garnet_random };

std::string to_string(EnvFamily f);
EnvFamily env_family_from_string(const std::string& name);

/// Parameters of a benchmark environment. Fields a family does not use are ignored.
///
///   gridworld        width x height grid, start (0,0), absorbing goal in the far
///                    corner paying 1 per step; actions up/right/down/left; with
///                    probability `noise` the move direction is uniform.
///   cliff            width x height grid, start (0,0), goal (width-1, 0), cells
///                    between them on row 0 are a cliff leading to an absorbing
///                    zero-reward state; same actions and noise as gridworld.
///   combination_lock `lock_width` good states plus a sink, `num_actions`
///                    actions, depth `horizon`. One secret action per step moves
///                    forward (uniformly among good states; into state 0 on the
///                    last transition); any other action falls into the sink.
///                    Reward 1 only for the secret action at the final step.
///   garnet_random    `num_states` x `num_actions`; each (h, s, a) picks
///                    `branching` distinct successors with Dirichlet(1) weights;
///                    each reward is nonzero with probability `reward_density`
///                    and then uniform on [0, 1).
struct EnvSpec {
  EnvFamily family = EnvFamily::combination_lock;
  int horizon = 8;
  int width = 4;
  int height = 4;
  int num_states = 10;
  int num_actions = 3;
  int branching = 3;
  int lock_width = 3;
  double noise = 0.0;
  double reward_density = 0.3;
  std::uint64_t seed = 0;

  bool operator==(const EnvSpec&) const = default;
};

/// Throws std::invalid_argument naming the offending parameter.
void validate_env_spec(const EnvSpec& spec);

TabularMdp instantiate(const EnvSpec& spec);

/// Secret action per step of a combination lock built from `spec`.
std::vector<int> lock_combination(const EnvSpec& spec);

Trajectory rollout(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed);
/// Draws one component uniformly, then rolls it out.
Trajectory rollout(const TabularMdp& mdp, const MixturePolicy& policy, std::uint64_t seed);

/// Sum of true rewards along a trajectory.
double trajectory_return(const TabularMdp& mdp, const Trajectory& traj);

enum class ExpertKind { optimal, epsilon_soft };

struct ExpertSpec {
  ExpertKind kind = ExpertKind::optimal;
  double epsilon = 0.0;  ///< uniform-mixing weight for epsilon_soft
  bool operator==(const ExpertSpec&) const = default;
};

/// Optimal expert = greedy policy of value_iteration under the true reward;
/// epsilon-soft mixes it with the uniform policy. Demo i uses seed
/// derive_seed(seed, expert_demos, i).
std::pair<Policy, Dataset> generate_expert(const TabularMdp& mdp, const ExpertSpec& expert,
                                           int n, std::uint64_t seed);

}  // namespace optail
