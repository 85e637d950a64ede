#include "optail/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optail {
namespace {

void require_compatible(const TabularMdp& mdp, const Shape& other, const char* what) {
  if (mdp.shape != other) {
    throw std::invalid_argument(std::string(what) + ": shape does not match MDP");
  }
}

// max_a q(s, a) over one step slice.
std::vector<double> state_values(std::span<const double> q_step, int num_states, int num_actions) {
  std::vector<double> v(num_states, 0.0);
  for (int s = 0; s < num_states; ++s) {
    const double* row = q_step.data() + static_cast<std::size_t>(s) * num_actions;
    v[s] = *std::max_element(row, row + num_actions);
  }
  return v;
}

}  // namespace

std::vector<double> bellman_backup(std::span<const double> q_next,
                                   std::span<const double> reward_h,
                                   std::span<const double> transitions_h, int num_states,
                                   int num_actions) {
  const auto cells = static_cast<std::size_t>(num_states) * num_actions;
  if (reward_h.size() != cells || transitions_h.size() != cells * num_states ||
      (!q_next.empty() && q_next.size() != cells)) {
    throw std::invalid_argument("bellman_backup: dimension mismatch");
  }
  std::vector<double> out(reward_h.begin(), reward_h.end());
  if (q_next.empty()) return out;
  const auto v_next = state_values(q_next, num_states, num_actions);
  for (std::size_t c = 0; c < cells; ++c) {
    const double* p = transitions_h.data() + c * num_states;
    double ev = 0.0;
    for (int s2 = 0; s2 < num_states; ++s2) ev += p[s2] * v_next[s2];
    out[c] += ev;
  }
  return out;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, const RewardTable& reward) {
  require_compatible(mdp, reward.shape, "value_iteration");
  const Shape& shp = mdp.shape;
  ValueIterationResult res;
  res.q_star = QTable(shp);
  for (int h = shp.horizon - 1; h >= 0; --h) {
    std::span<const double> q_next;
    if (h + 1 < shp.horizon) q_next = res.q_star.step(h + 1);
    const auto q_h = bellman_backup(q_next, reward.step(h), mdp.step_transitions(h),
                                    shp.num_states, shp.num_actions);
    std::copy(q_h.begin(), q_h.end(), res.q_star.values.begin() + shp.index(h, 0, 0));
  }
  std::vector<int> actions(static_cast<std::size_t>(shp.horizon) * shp.num_states);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      actions[static_cast<std::size_t>(h) * shp.num_states + s] = res.q_star.argmax_at(h, s);
    }
  }
  res.greedy = Policy::deterministic(shp, actions);
  res.v_star = res.q_star.max_at(0, mdp.initial_state);
  return res;
}

PolicyEvaluationResult policy_evaluation(const TabularMdp& mdp, const RewardTable& reward,
                                         const Policy& policy) {
  require_compatible(mdp, reward.shape, "policy_evaluation");
  require_compatible(mdp, policy.shape, "policy_evaluation");
  const Shape& shp = mdp.shape;
  const int S = shp.num_states;
  const int A = shp.num_actions;
  PolicyEvaluationResult res;
  res.q_pi = QTable(shp);
  std::vector<double> v_next(S, 0.0);
  std::vector<double> v_h(S, 0.0);
  for (int h = shp.horizon - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = reward(h, s, a);
        if (h + 1 < shp.horizon) {
          const auto p = mdp.next_dist(h, s, a);
          for (int s2 = 0; s2 < S; ++s2) q += p[s2] * v_next[s2];
        }
        res.q_pi(h, s, a) = q;
        v += policy(h, s, a) * q;
      }
      v_h[s] = v;
    }
    std::swap(v_next, v_h);
  }
  res.value = v_next[mdp.initial_state];
  return res;
}

double policy_value(const TabularMdp& mdp, const RewardTable& reward, const Policy& policy) {
  return policy_evaluation(mdp, reward, policy).value;
}

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy) {
  require_compatible(mdp, policy.shape, "occupancy_measure");
  const Shape& shp = mdp.shape;
  const int S = shp.num_states;
  const int A = shp.num_actions;
  OccupancyMeasure d{shp, std::vector<double>(shp.cells(), 0.0)};
  std::vector<double> state_dist(S, 0.0);
  state_dist[mdp.initial_state] = 1.0;
  for (int h = 0; h < shp.horizon; ++h) {
    std::vector<double> next(S, 0.0);
    for (int s = 0; s < S; ++s) {
      if (state_dist[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double mass = state_dist[s] * policy(h, s, a);
        d.values[shp.index(h, s, a)] = mass;
        if (mass == 0.0 || h + 1 == shp.horizon) continue;
        const auto p = mdp.next_dist(h, s, a);
        for (int s2 = 0; s2 < S; ++s2) next[s2] += mass * p[s2];
      }
    }
    state_dist = std::move(next);
  }
  return d;
}

double occupancy_value(const OccupancyMeasure& d, const RewardTable& reward) {
  if (d.shape != reward.shape) throw std::invalid_argument("occupancy_value: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i) total += d.values[i] * reward.values[i];
  return total;
}

PerturbationGap perturbation_gap(const TabularMdp& mdp, const RewardTable& r,
                                 const RewardTable& r_hat) {
  const auto vi = value_iteration(mdp, r);
  const auto vi_hat = value_iteration(mdp, r_hat);
  const Shape& shp = mdp.shape;
  const auto cells = shp.step_cells();
  PerturbationGap gap;
  gap.lhs.assign(shp.horizon, 0.0);
  gap.rhs.assign(shp.horizon, 0.0);
  std::vector<double> reward_sup(shp.horizon, 0.0);
  for (int h = 0; h < shp.horizon; ++h) {
    const auto base = shp.index(h, 0, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      gap.lhs[h] = std::max(gap.lhs[h],
                            std::abs(vi.q_star.values[base + c] - vi_hat.q_star.values[base + c]));
      reward_sup[h] = std::max(reward_sup[h], std::abs(r.values[base + c] - r_hat.values[base + c]));
    }
  }
  double tail = 0.0;
  for (int h = shp.horizon - 1; h >= 0; --h) {
    tail += reward_sup[h];
    gap.rhs[h] = tail;
  }
  return gap;
}

double bellman_residual(const TabularMdp& mdp, const RewardTable& reward, const QTable& q) {
  const Shape& shp = mdp.shape;
  double worst = 0.0;
  for (int h = 0; h < shp.horizon; ++h) {
    std::span<const double> q_next;
    if (h + 1 < shp.horizon) q_next = q.step(h + 1);
    const auto backed = bellman_backup(q_next, reward.step(h), mdp.step_transitions(h),
                                       shp.num_states, shp.num_actions);
    const auto q_h = q.step(h);
    for (std::size_t c = 0; c < backed.size(); ++c) {
      worst = std::max(worst, std::abs(q_h[c] - backed[c]));
    }
  }
  return worst;
}

}  // namespace optail
