#include "optail/simulator.hpp"

#include <numeric>
#include <stdexcept>

#include "optail/oracles.hpp"
#include "optail/rng.hpp"

namespace optail {
namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("env spec: " + msg);
}

// Grid dynamics shared by gridworld and cliff. Actions: 0 up (+y), 1 right (+x),
// 2 down (-y), 3 left (-x).
constexpr int kGridActions = 4;
constexpr int kDx[kGridActions] = {0, 1, 0, -1};
constexpr int kDy[kGridActions] = {1, 0, -1, 0};

struct GridLayout {
  int width;
  int height;
  int cell(int x, int y) const { return y * width + x; }
  int moved(int s, int dir) const {
    const int x = s % width;
    const int y = s / width;
    const int nx = x + kDx[dir];
    const int ny = y + kDy[dir];
    if (nx < 0 || nx >= width || ny < 0 || ny >= height) return s;
    return cell(nx, ny);
  }
};

TabularMdp build_grid(const EnvSpec& spec, bool with_cliff) {
  const GridLayout grid{spec.width, spec.height};
  const int cells = spec.width * spec.height;
  const int fallen = with_cliff ? cells : -1;
  const int S = with_cliff ? cells + 1 : cells;
  const Shape shp{spec.horizon, S, kGridActions};
  const int goal = with_cliff ? grid.cell(spec.width - 1, 0)
                              : grid.cell(spec.width - 1, spec.height - 1);
  auto is_cliff = [&](int s) {
    if (!with_cliff || s >= cells) return false;
    const int x = s % spec.width;
    const int y = s / spec.width;
    return y == 0 && x > 0 && x < spec.width - 1;
  };

  std::vector<double> trans(shp.cells() * S, 0.0);
  RewardTable reward(shp);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < kGridActions; ++a) {
        double* row = trans.data() + shp.index(h, s, a) * S;
        if (s == goal || s == fallen) {
          row[s] = 1.0;
          if (s == goal) reward(h, s, a) = 1.0;
          continue;
        }
        for (int dir = 0; dir < kGridActions; ++dir) {
          double p = spec.noise / kGridActions;
          if (dir == a) p += 1.0 - spec.noise;
          if (p == 0.0) continue;
          int next = grid.moved(s, dir);
          if (is_cliff(next)) next = fallen;
          row[next] += p;
        }
      }
    }
  }
  return make_mdp(shp, grid.cell(0, 0), std::move(trans), std::move(reward));
}

TabularMdp build_lock(const EnvSpec& spec) {
  const int good = spec.lock_width;
  const int sink = good;
  const int S = good + 1;
  const int A = spec.num_actions;
  const Shape shp{spec.horizon, S, A};
  const auto combo = lock_combination(spec);

  std::vector<double> trans(shp.cells() * S, 0.0);
  RewardTable reward(shp);
  for (int h = 0; h < shp.horizon; ++h) {
    const bool last_transition = h + 2 == shp.horizon;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double* row = trans.data() + shp.index(h, s, a) * S;
        if (s == sink || a != combo[h]) {
          row[sink] = 1.0;
          continue;
        }
        if (last_transition || h + 1 == shp.horizon) {
          row[0] = 1.0;
        } else {
          for (int g = 0; g < good; ++g) row[g] = 1.0 / good;
        }
      }
    }
  }
  reward(shp.horizon - 1, 0, combo[shp.horizon - 1]) = 1.0;
  return make_mdp(shp, 0, std::move(trans), std::move(reward));
}

TabularMdp build_garnet(const EnvSpec& spec) {
  const int S = spec.num_states;
  const int A = spec.num_actions;
  const Shape shp{spec.horizon, S, A};
  SplitMix64 rng(derive_seed(spec.seed, SeedStream::environment, 0));

  std::vector<double> trans(shp.cells() * S, 0.0);
  RewardTable reward(shp);
  std::vector<int> perm(S);
  std::vector<double> weights(spec.branching);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        // Partial Fisher-Yates: first `branching` entries are distinct successors.
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 0; i < spec.branching; ++i) {
          const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(S - i)));
          std::swap(perm[i], perm[j]);
        }
        double total = 0.0;
        for (auto& w : weights) {
          w = rng.exponential();
          total += w;
        }
        double* row = trans.data() + shp.index(h, s, a) * S;
        for (int i = 0; i < spec.branching; ++i) row[perm[i]] = weights[i] / total;
        if (rng.uniform() < spec.reward_density) reward(h, s, a) = rng.uniform();
      }
    }
  }
  return make_mdp(shp, 0, std::move(trans), std::move(reward));
}

}  // namespace

std::string to_string(EnvFamily f) {
  switch (f) {
    case EnvFamily::gridworld: return "gridworld";
    case EnvFamily::combination_lock: return "combination_lock";
    case EnvFamily::cliff: return "cliff";
    case EnvFamily::garnet_random: return "garnet_random";
  }
  return "unknown";
}

EnvFamily env_family_from_string(const std::string& name) {
  if (name == "gridworld") return EnvFamily::gridworld;
  if (name == "combination_lock") return EnvFamily::combination_lock;
  if (name == "cliff") return EnvFamily::cliff;
  if (name == "garnet_random") return EnvFamily::garnet_random;
  throw std::invalid_argument("env spec: unknown family '" + name + "'");
}

void validate_env_spec(const EnvSpec& spec) {
  require(spec.horizon >= 1 && spec.horizon <= 256, "horizon must be in [1, 256]");
  switch (spec.family) {
    case EnvFamily::gridworld:
    case EnvFamily::cliff:
      require(spec.width >= 2 && spec.width <= 32, "width must be in [2, 32]");
      require(spec.height >= 1 && spec.height <= 32, "height must be in [1, 32]");
      if (spec.family == EnvFamily::cliff) require(spec.height >= 2, "cliff needs height >= 2");
      require(spec.noise >= 0.0 && spec.noise <= 1.0, "noise must be in [0, 1]");
      break;
    case EnvFamily::combination_lock:
      require(spec.num_actions >= 2 && spec.num_actions <= 32, "num_actions must be in [2, 32]");
      require(spec.lock_width >= 1 && spec.lock_width <= 64, "lock_width must be in [1, 64]");
      break;
    case EnvFamily::garnet_random:
      require(spec.num_states >= 1 && spec.num_states <= 256, "num_states must be in [1, 256]");
      require(spec.num_actions >= 1 && spec.num_actions <= 32, "num_actions must be in [1, 32]");
      require(spec.branching >= 1 && spec.branching <= spec.num_states,
              "branching must be in [1, num_states]");
      require(spec.reward_density >= 0.0 && spec.reward_density <= 1.0,
              "reward_density must be in [0, 1]");
      break;
  }
}

std::vector<int> lock_combination(const EnvSpec& spec) {
  SplitMix64 rng(derive_seed(spec.seed, SeedStream::environment, 0));
  std::vector<int> combo(spec.horizon);
  for (auto& c : combo) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_actions)));
  return combo;
}

TabularMdp instantiate(const EnvSpec& spec) {
  validate_env_spec(spec);
  switch (spec.family) {
    case EnvFamily::gridworld: return build_grid(spec, false);
    case EnvFamily::cliff: return build_grid(spec, true);
    case EnvFamily::combination_lock: return build_lock(spec);
    case EnvFamily::garnet_random: return build_garnet(spec);
  }
  throw std::invalid_argument("env spec: unknown family");
}

Trajectory rollout(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed) {
  if (policy.shape != mdp.shape) throw std::invalid_argument("rollout: policy shape mismatch");
  SplitMix64 rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.steps.reserve(mdp.horizon());
  int s = mdp.initial_state;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const int a = rng.categorical(policy.row(h, s));
    traj.steps.push_back({s, a});
    if (h + 1 < mdp.horizon()) s = rng.categorical(mdp.next_dist(h, s, a));
  }
  return traj;
}

Trajectory rollout(const TabularMdp& mdp, const MixturePolicy& policy, std::uint64_t seed) {
  if (policy.components.empty()) throw std::invalid_argument("rollout: empty mixture");
  SplitMix64 rng(seed);
  const auto k = rng.below(policy.components.size());
  Trajectory traj = rollout(mdp, policy.components[k], rng());
  traj.seed = seed;
  return traj;
}

double trajectory_return(const TabularMdp& mdp, const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t h = 0; h < traj.steps.size(); ++h) {
    total += mdp.true_reward(static_cast<int>(h), traj.steps[h].state, traj.steps[h].action);
  }
  return total;
}

std::pair<Policy, Dataset> generate_expert(const TabularMdp& mdp, const ExpertSpec& expert,
                                           int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_expert: n must be >= 1");
  Policy pi = value_iteration(mdp, mdp.true_reward).greedy;
  if (expert.kind == ExpertKind::epsilon_soft && expert.epsilon > 0.0) {
    if (expert.epsilon > 1.0) throw std::invalid_argument("generate_expert: epsilon > 1");
    const double uniform = expert.epsilon / mdp.num_actions();
    std::vector<double> probs(pi.probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      probs[i] = (1.0 - expert.epsilon) * pi.probs[i] + uniform;
    }
    pi = Policy::stochastic(mdp.shape, std::move(probs));
  }
  Dataset demos;
  demos.role = DatasetRole::expert_demos;
  demos.trajectories.reserve(n);
  for (int i = 0; i < n; ++i) {
    demos.trajectories.push_back(
        rollout(mdp, pi, derive_seed(seed, SeedStream::expert_demos, static_cast<std::uint64_t>(i))));
  }
  return {std::move(pi), std::move(demos)};
}

}  // namespace optail
