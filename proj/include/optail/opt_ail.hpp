#pragma once

// The OPT-AIL loop, the behavioral-cloning baseline, and uniform mixtures.
//
// Iteration k = 1..K:
//   1. roll out pi^{k-1}, append tau^{k-1} to D^k
//   2. feed L^{k-1} to the online reward learner, obtaining r^k
//   3. minimize BE^k(Q) - lambda max_a Q_1(s_1, a) under r^k on D^k
//   4. pi^k = greedy(Q^k)
// pi^0 is uniform. The output is the uniform mixture of pi^1..pi^K. All
// reported values are exact oracle evaluations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optail/mdp.hpp"
#include "optail/q_learner.hpp"
#include "optail/reward_learner.hpp"
#include "optail/simulator.hpp"

namespace optail {

struct RewardSettings {
  RewardAlgorithm algorithm = RewardAlgorithm::ogd;
  StepSchedule schedule = StepSchedule::horizon_known;
  double step_scale = 1.0;
  std::optional<double> beta;  ///< FTRL weight; defaults to the OGD-matched value
  RewardInit init = RewardInit::half;

  bool operator==(const RewardSettings&) const = default;
};

struct QSettings {
  /// Solver knobs; solver.lambda is overwritten by the resolved lambda.
  QSolveConfig solver;
  /// Direct lambda override.
  std::optional<double> lambda;
  /// lambda = lambda_scale * sqrt(K H^3 log K / gec_guess) when not overridden.
  double lambda_scale = 0.1;
  /// Defaults to H * S * A.
  std::optional<double> gec_guess;

  bool operator==(const QSettings&) const = default;
};

struct RunConfig {
  EnvSpec env;
  ExpertSpec expert;
  int num_demos = 1;
  int iterations = 100;
  RewardSettings reward;
  QSettings q;
  std::uint64_t seed = 0;
  /// Log every n-th iteration (the last one is always logged).
  int eval_every = 1;
  /// Keep r^k, Q^k, pi^k for post-hoc analysis.
  bool keep_artifacts = false;

  bool operator==(const RunConfig&) const = default;
};

void validate_run_config(const RunConfig& cfg);

/// Lambda actually used by a run on an MDP of the given shape.
double resolve_lambda(const RunConfig& cfg, const Shape& shape);

struct IterationLog {
  int iteration = 0;
  long long interactions = 0;  ///< environment steps so far (k * H)
  std::uint64_t reward_digest = 0;
  double v_policy_true = 0.0;     ///< V^{pi^k}_{r_true}
  double v_expert_true = 0.0;     ///< V^{pi^E}_{r_true}
  double v_policy_learned = 0.0;  ///< V^{pi^k}_{r^k}
  double v_expert_learned = 0.0;  ///< V^{pi^E}_{r^k}
  double be = 0.0;
  double optimism = 0.0;
  double objective = 0.0;
  double eps_q_opt_proxy = 0.0;
  double eps_r_opt = 0.0;        ///< realized average regret over rounds 0..k-1
  double mixture_value = 0.0;    ///< V of the uniform mixture of pi^1..pi^k
  double gap = 0.0;              ///< v_expert_true - mixture_value
  double reward_error = 0.0;
  double policy_error = 0.0;
  int solver_iterations = 0;
};

struct RunArtifacts {
  std::vector<RewardTable> rewards;  ///< r^1..r^K
  std::vector<QTable> q_tables;      ///< Q^1..Q^K
  std::vector<Policy> policies;      ///< pi^1..pi^K
};

struct RunRecord {
  std::vector<IterationLog> log;
  double v_expert_true = 0.0;
  double mixture_value = 0.0;
  double imitation_gap = 0.0;
  double reward_error = 0.0;
  double policy_error = 0.0;
  double eps_r_opt = 0.0;
  double lambda = 0.0;
  std::size_t dataset_size = 0;
  std::string rng_algorithm;
  std::optional<RunArtifacts> artifacts;
};

/// Builds the environment and demos from cfg, then runs.
RunRecord run_opt_ail(const RunConfig& cfg);
/// Runs on a given MDP, expert, and demos (cfg.env and cfg.expert are ignored).
RunRecord run_opt_ail(const TabularMdp& mdp, const Policy& expert, const Dataset& demos,
                      const RunConfig& cfg);

/// pi_h(a | s) = empirical frequency among demo visits to (h, s); uniform where unvisited.
Policy bc_baseline(const TabularMdp& mdp, const Dataset& demos);

/// (1/K) sum_k V^{pi^k}_r. Throws on an empty list.
double mixture_value(const TabularMdp& mdp, const RewardTable& reward,
                     const std::vector<Policy>& policies);

/// FNV-1a over the bit patterns of the table entries.
std::uint64_t table_digest(const std::vector<double>& values);

}  // namespace optail
