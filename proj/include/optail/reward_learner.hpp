#pragma once

// Online reward learning over the box [0,1]^{H*S*A}.
//
// The per-iteration loss L^i(r) = Vhat^{pi^i}_r - Vhat^{E}_r is linear in r,
// so each loss is fully described by its gradient: learner visit counts of
// trajectory tau^i minus the average expert visit counts.

#include <cstdint>
#include <vector>

#include "optail/mdp.hpp"

namespace optail {

/// Vhat^{pi}_r = sum_h r_h(s_h, a_h) along one trajectory.
double empirical_policy_value(const Trajectory& traj, const RewardTable& reward);

/// Vhat^{E}_r = (1/N) sum over demos. Throws on an empty demo set.
double empirical_expert_value(const Dataset& demos, const RewardTable& reward);

struct RewardLossGradient {
  Shape shape;
  std::vector<double> values;
  int iteration = 0;

  /// <g, r> = L(r).
  double dot(const RewardTable& reward) const;
  /// Euclidean norm.
  double norm2() const;
};

RewardLossGradient loss_gradient(const Trajectory& traj_i, const Dataset& demos, Shape shape,
                                 int iteration = 0);

enum class RewardAlgorithm { ogd, ftrl };
enum class StepSchedule { horizon_known, anytime };
enum class RewardInit { half, zero };

struct RewardLearnerConfig {
  RewardAlgorithm algorithm = RewardAlgorithm::ogd;
  StepSchedule schedule = StepSchedule::horizon_known;
  int total_rounds = 1;          ///< K, used by the horizon-known schedule
  double diameter = 1.0;         ///< D, Euclidean diameter of the reward box
  double gradient_bound = 1.0;   ///< G, bound on gradient 2-norms
  double step_scale = 1.0;       ///< multiplies the OGD step size
  double beta = 1.0;             ///< FTRL regularization weight
  RewardInit init = RewardInit::half;
};

/// Defaults for a run: D = sqrt(H S A), G = sqrt(2H) (a trajectory indicator
/// minus an empirical distribution has squared norm at most 2 per step), and
/// beta = G sqrt(K) / (2 D), which matches the OGD step size.
RewardLearnerConfig default_reward_config(Shape shape, int total_rounds,
                                          RewardAlgorithm algorithm = RewardAlgorithm::ogd);

struct RewardLearnerState {
  RewardLearnerConfig config;
  RewardTable reward;                ///< current iterate r^k
  std::vector<double> gradient_sum;  ///< G = sum of observed gradients
  int rounds = 0;                    ///< number of observed losses
  double played_loss = 0.0;          ///< sum_i <g_i, r^i>

  /// (1/rounds) * max_r sum_i [<g_i, r^i> - <g_i, r>]; 0 before any round.
  double average_regret() const;
};

RewardLearnerState init_reward_learner(Shape shape, const RewardLearnerConfig& config);

/// OGD step size for the round about to be taken.
double ogd_step_size(const RewardLearnerState& state);

/// Records the loss of the current iterate (regret bookkeeping and G).
RewardLearnerState accumulate(RewardLearnerState state, const RewardLossGradient& grad);

/// r <- clip(r - eta * grad, 0, 1); also accumulates the loss.
RewardLearnerState ogd_update(RewardLearnerState state, const RewardLossGradient& grad);

/// r <- argmin_{r in box} <G, r> + beta ||r - 1/2||^2 = clip(1/2 - G/(2 beta), 0, 1).
/// Uses the accumulated G; call accumulate() first.
RewardLearnerState ftrl_update(RewardLearnerState state);

/// Dispatches on config.algorithm.
RewardLearnerState reward_update(RewardLearnerState state, const RewardLossGradient& grad);

/// Exact average regret of a played sequence against the best fixed reward in
/// the box. The comparator is per-coordinate: 0 where the summed gradient is
/// positive, 1 otherwise. Throws on empty or mismatched history.
double reward_opt_error(const std::vector<RewardLossGradient>& loss_gradients,
                        const std::vector<RewardTable>& chosen_rewards);

}  // namespace optail
