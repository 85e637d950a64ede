#pragma once

// Post-hoc metrics over run artifacts: the reward/policy error split of the
// imitation gap, a Bellman-error based complexity witness, and multi-seed
// aggregation of learning curves.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "optail/mdp.hpp"
#include "optail/opt_ail.hpp"

namespace optail {

/// gap = V^E_true - (1/K) sum_k V^{pi^k}_true, split as
///   reward_error = (1/K) sum_k [V^E_true - V^k_true - (V^E_{r^k} - V^k_{r^k})]
///   policy_error = (1/K) sum_k [V^E_{r^k} - V^k_{r^k}]
struct GapDecomposition {
  double reward_error = 0.0;
  double policy_error = 0.0;
  double gap = 0.0;
};

/// All values by policy evaluation. Throws on empty or mismatched lists.
GapDecomposition decompose_gap(const TabularMdp& mdp, const Policy& expert,
                               const std::vector<RewardTable>& rewards,
                               const std::vector<Policy>& policies);

/// E[sum_h (q_h - T^r_h q_{h+1})^2 | behavior], computed through the occupancy measure.
double expected_squared_bellman_error(const TabularMdp& mdp, const QTable& q,
                                      const RewardTable& reward, const Policy& behavior);

/// Lower-bound witness for the complexity constant d in
///   sum_k pred_k <= mu/2 sum_k sum_{i<k} be_{k,i} + d/(2 mu) + sqrt(d H K) + eps H K.
/// Only a witness: the constant quantifies over all sequences, one run cannot pin it down.
struct GecDiagnostic {
  std::vector<double> prediction_error;  ///< Q^k_1(s_1, pi^k) - V^{pi^k}_{r^k}
  std::vector<double> cumulative_be;     ///< sum_{i<k} E[residual^2 of Q^k under r^k | pi^i]
  double epsilon = 0.0;                  ///< target epsilon / H
  std::vector<double> mu_grid;
  std::vector<double> mu_witness;        ///< implied lower bound on d for each mu
  double closed_form_witness = 0.0;      ///< the same bound optimized over mu analytically
  double best_witness = 0.0;
  std::string label = "lower-bound witness (diagnostic), not the coefficient itself";
};

GecDiagnostic gec_diagnostic(const TabularMdp& mdp, const RunArtifacts& artifacts,
                             double target_epsilon = 0.1,
                             std::vector<double> mu_grid = {});

/// Column names written per iteration, in CSV order after `iteration, interactions`.
const std::vector<std::string>& metric_names();

/// Metric values of one log row in metric_names() order.
std::vector<double> metric_values(const IterationLog& row);

struct AggregateRow {
  int iteration = 0;
  long long interactions = 0;
  std::vector<double> mean;  ///< metric_names() order
  std::vector<double> std;   ///< sample std, n-1 denominator; 0 for one record
};

struct Aggregate {
  std::vector<AggregateRow> rows;
  std::size_t num_records = 0;
};

/// Per-iteration mean and sample standard deviation. Throws on an empty map or
/// on records whose iteration grids differ.
Aggregate aggregate(const std::map<std::uint64_t, RunRecord>& records);

}  // namespace optail
