#pragma once

// Exact dynamic-programming oracles for finite-horizon MDPs. Everything here
// is backward or forward induction over doubles; nothing is iterative.

#include <span>
#include <vector>

#include "optail/mdp.hpp"

namespace optail {

/// d_h(s, a): probability that the policy visits (s, a) at step h.
struct OccupancyMeasure {
  Shape shape;
  std::vector<double> values;

  double operator()(int h, int s, int a) const { return values[shape.index(h, s, a)]; }
  std::span<const double> step(int h) const {
    return {values.data() + shape.index(h, 0, 0), shape.step_cells()};
  }
};

/// (T_h Q_{h+1})(s, a) = r_h(s, a) + sum_{s'} P_h(s' | s, a) max_{a'} Q_{h+1}(s', a').
/// An empty q_next stands for Q_{H+1} = 0. Results are not clipped.
/// transitions_h is laid out [s][a][s'] as returned by TabularMdp::step_transitions.
std::vector<double> bellman_backup(std::span<const double> q_next,
                                   std::span<const double> reward_h,
                                   std::span<const double> transitions_h, int num_states,
                                   int num_actions);

struct ValueIterationResult {
  QTable q_star;
  Policy greedy;  ///< lowest-index tie-break
  double v_star = 0.0;
};

ValueIterationResult value_iteration(const TabularMdp& mdp, const RewardTable& reward);

struct PolicyEvaluationResult {
  double value = 0.0;
  QTable q_pi;
};

PolicyEvaluationResult policy_evaluation(const TabularMdp& mdp, const RewardTable& reward,
                                         const Policy& policy);

/// Value only; skips materializing Q^pi.
double policy_value(const TabularMdp& mdp, const RewardTable& reward, const Policy& policy);

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy);

/// <d, r> = sum_h sum_{s,a} d_h(s, a) r_h(s, a).
double occupancy_value(const OccupancyMeasure& d, const RewardTable& reward);

struct PerturbationGap {
  std::vector<double> lhs;  ///< per-h sup-norm of Q*^r_h - Q*^{r_hat}_h
  std::vector<double> rhs;  ///< per-h sum_{h' >= h} ||r_{h'} - r_hat_{h'}||_inf
};

PerturbationGap perturbation_gap(const TabularMdp& mdp, const RewardTable& r,
                                 const RewardTable& r_hat);

/// Max over all (h, s, a) of |q_h - T_h q_{h+1}| under the given reward.
double bellman_residual(const TabularMdp& mdp, const RewardTable& reward, const QTable& q);

}  // namespace optail
