#include "optail/reward_learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optail {

double empirical_policy_value(const Trajectory& traj, const RewardTable& reward) {
  double total = 0.0;
  for (std::size_t h = 0; h < traj.steps.size(); ++h) {
    total += reward(static_cast<int>(h), traj.steps[h].state, traj.steps[h].action);
  }
  return total;
}

double empirical_expert_value(const Dataset& demos, const RewardTable& reward) {
  if (demos.empty()) throw std::invalid_argument("empirical_expert_value: empty demo set");
  double total = 0.0;
  for (const auto& t : demos.trajectories) total += empirical_policy_value(t, reward);
  return total / static_cast<double>(demos.size());
}

double RewardLossGradient::dot(const RewardTable& reward) const {
  if (reward.shape != shape) throw std::invalid_argument("gradient dot: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += values[i] * reward.values[i];
  return total;
}

double RewardLossGradient::norm2() const {
  double total = 0.0;
  for (double v : values) total += v * v;
  return std::sqrt(total);
}

RewardLossGradient loss_gradient(const Trajectory& traj_i, const Dataset& demos, Shape shape,
                                 int iteration) {
  if (demos.empty()) throw std::invalid_argument("loss_gradient: empty demo set");
  RewardLossGradient g{shape, std::vector<double>(shape.cells(), 0.0), iteration};
  for (std::size_t h = 0; h < traj_i.steps.size(); ++h) {
    g.values[shape.index(static_cast<int>(h), traj_i.steps[h].state, traj_i.steps[h].action)] += 1.0;
  }
  const double w = 1.0 / static_cast<double>(demos.size());
  for (const auto& t : demos.trajectories) {
    for (std::size_t h = 0; h < t.steps.size(); ++h) {
      g.values[shape.index(static_cast<int>(h), t.steps[h].state, t.steps[h].action)] -= w;
    }
  }
  return g;
}

RewardLearnerConfig default_reward_config(Shape shape, int total_rounds,
                                          RewardAlgorithm algorithm) {
  RewardLearnerConfig cfg;
  cfg.algorithm = algorithm;
  cfg.total_rounds = std::max(1, total_rounds);
  cfg.diameter = std::sqrt(static_cast<double>(shape.cells()));
  cfg.gradient_bound = std::sqrt(2.0 * shape.horizon);
  cfg.beta = cfg.gradient_bound * std::sqrt(static_cast<double>(cfg.total_rounds)) /
             (2.0 * cfg.diameter);
  return cfg;
}

double RewardLearnerState::average_regret() const {
  if (rounds == 0) return 0.0;
  double best = 0.0;  // min_r <G, r> over the box
  for (double g : gradient_sum) best += std::min(0.0, g);
  return (played_loss - best) / static_cast<double>(rounds);
}

RewardLearnerState init_reward_learner(Shape shape, const RewardLearnerConfig& config) {
  RewardLearnerState st;
  st.config = config;
  st.reward = RewardTable(shape, config.init == RewardInit::half ? 0.5 : 0.0);
  st.gradient_sum.assign(shape.cells(), 0.0);
  return st;
}

double ogd_step_size(const RewardLearnerState& state) {
  const auto& c = state.config;
  const double rounds = c.schedule == StepSchedule::horizon_known
                            ? static_cast<double>(c.total_rounds)
                            : static_cast<double>(state.rounds + 1);
  return c.step_scale * c.diameter / (c.gradient_bound * std::sqrt(rounds));
}

RewardLearnerState accumulate(RewardLearnerState state, const RewardLossGradient& grad) {
  if (grad.shape != state.reward.shape) throw std::invalid_argument("accumulate: shape mismatch");
  state.played_loss += grad.dot(state.reward);
  for (std::size_t i = 0; i < grad.values.size(); ++i) state.gradient_sum[i] += grad.values[i];
  ++state.rounds;
  return state;
}

RewardLearnerState ogd_update(RewardLearnerState state, const RewardLossGradient& grad) {
  const double eta = ogd_step_size(state);
  state = accumulate(std::move(state), grad);
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    auto& r = state.reward.values[i];
    r = std::clamp(r - eta * grad.values[i], 0.0, 1.0);
  }
  return state;
}

RewardLearnerState ftrl_update(RewardLearnerState state) {
  const double beta = state.config.beta;
  if (!(beta > 0.0)) throw std::invalid_argument("ftrl_update: beta must be positive");
  for (std::size_t i = 0; i < state.gradient_sum.size(); ++i) {
    state.reward.values[i] = std::clamp(0.5 - state.gradient_sum[i] / (2.0 * beta), 0.0, 1.0);
  }
  return state;
}

RewardLearnerState reward_update(RewardLearnerState state, const RewardLossGradient& grad) {
  if (state.config.algorithm == RewardAlgorithm::ogd) return ogd_update(std::move(state), grad);
  return ftrl_update(accumulate(std::move(state), grad));
}

double reward_opt_error(const std::vector<RewardLossGradient>& loss_gradients,
                        const std::vector<RewardTable>& chosen_rewards) {
  if (loss_gradients.empty()) throw std::invalid_argument("reward_opt_error: empty history");
  if (loss_gradients.size() != chosen_rewards.size()) {
    throw std::invalid_argument("reward_opt_error: length mismatch");
  }
  const Shape shape = loss_gradients.front().shape;
  std::vector<double> total(shape.cells(), 0.0);
  double played = 0.0;
  for (std::size_t k = 0; k < loss_gradients.size(); ++k) {
    const auto& g = loss_gradients[k];
    played += g.dot(chosen_rewards[k]);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g.values[i];
  }
  double best = 0.0;
  for (double t : total) best += std::min(0.0, t);
  return (played - best) / static_cast<double>(loss_gradients.size());
}

}  // namespace optail
