#include "optail/opt_ail.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "optail/oracles.hpp"
#include "optail/rng.hpp"

namespace optail {

void validate_run_config(const RunConfig& cfg) {
  validate_env_spec(cfg.env);
  if (cfg.iterations < 1) throw std::invalid_argument("run config: iterations must be >= 1");
  if (cfg.num_demos < 1) throw std::invalid_argument("run config: num_demos must be >= 1");
  if (cfg.eval_every < 1) throw std::invalid_argument("run config: eval_every must be >= 1");
  if (cfg.expert.epsilon < 0.0 || cfg.expert.epsilon > 1.0) {
    throw std::invalid_argument("run config: expert epsilon must be in [0, 1]");
  }
  if (!(cfg.reward.step_scale > 0.0)) throw std::invalid_argument("run config: step_scale must be positive");
  if (cfg.reward.beta && !(*cfg.reward.beta > 0.0)) {
    throw std::invalid_argument("run config: beta must be positive");
  }
  if (cfg.q.lambda && !(*cfg.q.lambda >= 0.0)) throw std::invalid_argument("run config: lambda must be >= 0");
  if (!(cfg.q.lambda_scale >= 0.0)) throw std::invalid_argument("run config: lambda_scale must be >= 0");
  if (cfg.q.gec_guess && !(*cfg.q.gec_guess > 0.0)) {
    throw std::invalid_argument("run config: gec_guess must be positive");
  }
  validate_q_config(cfg.q.solver);
}

double resolve_lambda(const RunConfig& cfg, const Shape& shape) {
  if (cfg.q.lambda) return *cfg.q.lambda;
  const double K = cfg.iterations;
  const double H = shape.horizon;
  const double d = cfg.q.gec_guess.value_or(static_cast<double>(shape.cells()));
  return cfg.q.lambda_scale * std::sqrt(K * H * H * H * std::log(std::max(K, 2.0)) / d);
}

std::uint64_t table_digest(const std::vector<double>& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= bits & 0xffU;
      h *= 0x100000001b3ULL;
      bits >>= 8;
    }
  }
  return h;
}

RunRecord run_opt_ail(const RunConfig& cfg) {
  validate_run_config(cfg);
  const TabularMdp mdp = instantiate(cfg.env);
  auto [expert, demos] = generate_expert(mdp, cfg.expert, cfg.num_demos,
                                         derive_seed(cfg.seed, SeedStream::expert_demos, 0));
  return run_opt_ail(mdp, expert, demos, cfg);
}

RunRecord run_opt_ail(const TabularMdp& mdp, const Policy& expert, const Dataset& demos,
                      const RunConfig& cfg) {
  validate_run_config(cfg);
  if (demos.empty()) throw std::invalid_argument("run_opt_ail: empty demo set");
  const Shape& shp = mdp.shape;
  const int K = cfg.iterations;

  RewardLearnerConfig rcfg = default_reward_config(shp, K, cfg.reward.algorithm);
  rcfg.schedule = cfg.reward.schedule;
  rcfg.step_scale = cfg.reward.step_scale;
  rcfg.init = cfg.reward.init;
  if (cfg.reward.beta) rcfg.beta = *cfg.reward.beta;
  RewardLearnerState learner = init_reward_learner(shp, rcfg);

  QSolveConfig qcfg = cfg.q.solver;
  qcfg.lambda = resolve_lambda(cfg, shp);

  RunRecord record;
  record.lambda = qcfg.lambda;
  record.rng_algorithm = kRngAlgorithm;
  record.v_expert_true = policy_value(mdp, mdp.true_reward, expert);
  if (cfg.keep_artifacts) record.artifacts.emplace();

  DatasetStats stats(shp);
  Policy policy = Policy::uniform(shp);
  double value_sum = 0.0;
  double reward_error_sum = 0.0;
  double policy_error_sum = 0.0;

  for (int k = 1; k <= K; ++k) {
    const auto traj = rollout(mdp, policy, derive_seed(cfg.seed, SeedStream::learner_rollouts,
                                                       static_cast<std::uint64_t>(k - 1)));
    stats.add(traj);
    learner = reward_update(std::move(learner), loss_gradient(traj, demos, shp, k - 1));
    const RewardTable& reward = learner.reward;

    qcfg.seed = derive_seed(cfg.seed, SeedStream::solver, static_cast<std::uint64_t>(k));
    QSolveResult sol = solve(stats, reward, mdp.initial_state, qcfg);
    policy = greedy_policy(sol.q);

    const double v_true = policy_value(mdp, mdp.true_reward, policy);
    const double v_learned = policy_value(mdp, reward, policy);
    const double ve_learned = policy_value(mdp, reward, expert);
    value_sum += v_true;
    reward_error_sum += (record.v_expert_true - v_true) - (ve_learned - v_learned);
    policy_error_sum += ve_learned - v_learned;

    const double mixture = value_sum / k;
    if (k % cfg.eval_every == 0 || k == K) {
      IterationLog row;
      row.iteration = k;
      row.interactions = static_cast<long long>(k) * shp.horizon;
      row.reward_digest = table_digest(reward.values);
      row.v_policy_true = v_true;
      row.v_expert_true = record.v_expert_true;
      row.v_policy_learned = v_learned;
      row.v_expert_learned = ve_learned;
      row.be = sol.be;
      row.optimism = sol.optimism;
      row.objective = sol.objective;
      row.eps_q_opt_proxy =
          *std::max_element(sol.restart_objectives.begin(), sol.restart_objectives.end()) -
          sol.objective;
      row.eps_r_opt = learner.average_regret();
      row.mixture_value = mixture;
      row.gap = record.v_expert_true - mixture;
      row.reward_error = reward_error_sum / k;
      row.policy_error = policy_error_sum / k;
      row.solver_iterations = sol.iterations;
      record.log.push_back(row);
    }
    if (record.artifacts) {
      record.artifacts->rewards.push_back(reward);
      record.artifacts->q_tables.push_back(sol.q);
      record.artifacts->policies.push_back(policy);
    }
  }

  record.mixture_value = value_sum / K;
  record.imitation_gap = record.v_expert_true - record.mixture_value;
  record.reward_error = reward_error_sum / K;
  record.policy_error = policy_error_sum / K;
  record.eps_r_opt = learner.average_regret();
  record.dataset_size = stats.num_trajectories();
  return record;
}

Policy bc_baseline(const TabularMdp& mdp, const Dataset& demos) {
  if (demos.empty()) throw std::invalid_argument("bc_baseline: empty demo set");
  const Shape& shp = mdp.shape;
  std::vector<double> counts(shp.cells(), 0.0);
  for (const auto& t : demos.trajectories) {
    if (!trajectory_fits(t, shp)) throw std::invalid_argument("bc_baseline: demo does not fit the MDP");
    for (int h = 0; h < shp.horizon; ++h) counts[shp.index(h, t.steps[h].state, t.steps[h].action)] += 1.0;
  }
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      double total = 0.0;
      for (int a = 0; a < shp.num_actions; ++a) total += counts[shp.index(h, s, a)];
      for (int a = 0; a < shp.num_actions; ++a) {
        auto& c = counts[shp.index(h, s, a)];
        c = total > 0.0 ? c / total : 1.0 / shp.num_actions;
      }
    }
  }
  return Policy::stochastic(shp, std::move(counts));
}

double mixture_value(const TabularMdp& mdp, const RewardTable& reward,
                     const std::vector<Policy>& policies) {
  if (policies.empty()) throw std::invalid_argument("mixture_value: empty policy list");
  double total = 0.0;
  for (const auto& p : policies) total += policy_value(mdp, reward, p);
  return total / static_cast<double>(policies.size());
}

}  // namespace optail
