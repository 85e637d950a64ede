#include "optail/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "optail/oracles.hpp"

namespace optail {

GapDecomposition decompose_gap(const TabularMdp& mdp, const Policy& expert,
                               const std::vector<RewardTable>& rewards,
                               const std::vector<Policy>& policies) {
  if (rewards.empty()) throw std::invalid_argument("decompose_gap: empty sequence");
  if (rewards.size() != policies.size()) {
    throw std::invalid_argument("decompose_gap: reward and policy lists differ in length");
  }
  const double ve_true = policy_value(mdp, mdp.true_reward, expert);
  double reward_sum = 0.0;
  double policy_sum = 0.0;
  double value_sum = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    const double v_true = policy_value(mdp, mdp.true_reward, policies[k]);
    const double ve_k = policy_value(mdp, rewards[k], expert);
    const double v_k = policy_value(mdp, rewards[k], policies[k]);
    value_sum += v_true;
    reward_sum += (ve_true - v_true) - (ve_k - v_k);
    policy_sum += ve_k - v_k;
  }
  const double K = static_cast<double>(rewards.size());
  return {reward_sum / K, policy_sum / K, ve_true - value_sum / K};
}

namespace {

// (q_h - T^r_h q_{h+1})^2 for every cell.
std::vector<double> squared_residuals(const TabularMdp& mdp, const QTable& q,
                                      const RewardTable& reward) {
  const Shape& shp = mdp.shape;
  std::vector<double> out(shp.cells(), 0.0);
  for (int h = 0; h < shp.horizon; ++h) {
    std::span<const double> q_next;
    if (h + 1 < shp.horizon) q_next = q.step(h + 1);
    const auto target = bellman_backup(q_next, reward.step(h), mdp.step_transitions(h),
                                       shp.num_states, shp.num_actions);
    const auto q_h = q.step(h);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double diff = q_h[i] - target[i];
      out[shp.index(h, 0, 0) + i] = diff * diff;
    }
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

double expected_squared_bellman_error(const TabularMdp& mdp, const QTable& q,
                                      const RewardTable& reward, const Policy& behavior) {
  if (q.shape != mdp.shape || reward.shape != mdp.shape || behavior.shape != mdp.shape) {
    throw std::invalid_argument("expected_squared_bellman_error: shape mismatch");
  }
  return dot(occupancy_measure(mdp, behavior).values, squared_residuals(mdp, q, reward));
}

GecDiagnostic gec_diagnostic(const TabularMdp& mdp, const RunArtifacts& artifacts,
                             double target_epsilon, std::vector<double> mu_grid) {
  const std::size_t K = artifacts.policies.size();
  if (K == 0 || artifacts.rewards.size() != K || artifacts.q_tables.size() != K) {
    throw std::invalid_argument("gec_diagnostic: inconsistent run artifacts");
  }
  const Shape& shp = mdp.shape;
  GecDiagnostic out;
  out.epsilon = target_epsilon / shp.horizon;
  if (mu_grid.empty()) {
    for (int e = -16; e <= 16; ++e) mu_grid.push_back(std::pow(10.0, e / 4.0));
  }
  out.mu_grid = std::move(mu_grid);

  // sum_{i<k} E[. | pi^i] is linear in the occupancy, so keep a running sum of
  // the occupancies of pi^1 .. pi^{k-1}.
  std::vector<double> past_occupancy(shp.cells(), 0.0);
  double pred_total = 0.0;
  double be_total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& q = artifacts.q_tables[k];
    const auto& r = artifacts.rewards[k];
    const auto& pi = artifacts.policies[k];
    double q_start = 0.0;
    for (int a = 0; a < shp.num_actions; ++a) {
      q_start += pi(0, mdp.initial_state, a) * q(0, mdp.initial_state, a);
    }
    const double pred = q_start - policy_value(mdp, r, pi);
    const double cum = dot(past_occupancy, squared_residuals(mdp, q, r));
    out.prediction_error.push_back(pred);
    out.cumulative_be.push_back(cum);
    pred_total += pred;
    be_total += cum;
    const auto d = occupancy_measure(mdp, pi);
    for (std::size_t i = 0; i < d.values.size(); ++i) past_occupancy[i] += d.values[i];
  }

  const double HK = static_cast<double>(shp.horizon) * static_cast<double>(K);
  const double slack = out.epsilon * HK;
  // For fixed mu, x = sqrt(d) must satisfy x^2/(2 mu) + x sqrt(HK) >= R.
  for (double mu : out.mu_grid) {
    const double R = pred_total - 0.5 * mu * be_total - slack;
    double w = 0.0;
    if (R > 0.0) {
      const double x = mu * (std::sqrt(HK + 2.0 * R / mu) - std::sqrt(HK));
      w = x * x;
    }
    out.mu_witness.push_back(w);
  }
  // inf over mu of mu B/2 + d/(2 mu) is sqrt(d B).
  const double excess = std::max(0.0, pred_total - slack);
  const double x = excess / (std::sqrt(std::max(0.0, be_total)) + std::sqrt(HK));
  out.closed_form_witness = x * x;
  out.best_witness = out.closed_form_witness;
  for (double w : out.mu_witness) out.best_witness = std::max(out.best_witness, w);
  return out;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "gap",        "reward_error",    "policy_error",  "be",           "optimism",
      "eps_r_opt",  "eps_q_opt_proxy", "v_policy_true", "v_expert_true"};
  return names;
}

std::vector<double> metric_values(const IterationLog& row) {
  return {row.gap,       row.reward_error,    row.policy_error,  row.be,           row.optimism,
          row.eps_r_opt, row.eps_q_opt_proxy, row.v_policy_true, row.v_expert_true};
}

Aggregate aggregate(const std::map<std::uint64_t, RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  const auto& first = records.begin()->second.log;
  for (const auto& [seed, rec] : records) {
    bool aligned = rec.log.size() == first.size();
    for (std::size_t i = 0; aligned && i < first.size(); ++i) {
      aligned = rec.log[i].iteration == first[i].iteration;
    }
    if (!aligned) {
      throw std::invalid_argument("aggregate: iteration grid of seed " + std::to_string(seed) +
                                  " does not match");
    }
  }

  const std::size_t m = metric_names().size();
  const double n = static_cast<double>(records.size());
  Aggregate out;
  out.num_records = records.size();
  for (std::size_t i = 0; i < first.size(); ++i) {
    AggregateRow row;
    row.iteration = first[i].iteration;
    row.interactions = first[i].interactions;
    row.mean.assign(m, 0.0);
    row.std.assign(m, 0.0);
    for (const auto& [seed, rec] : records) {
      const auto v = metric_values(rec.log[i]);
      for (std::size_t j = 0; j < m; ++j) row.mean[j] += v[j];
    }
    for (auto& x : row.mean) x /= n;
    if (records.size() > 1) {
      for (const auto& [seed, rec] : records) {
        const auto v = metric_values(rec.log[i]);
        for (std::size_t j = 0; j < m; ++j) {
          const double dev = v[j] - row.mean[j];
          row.std[j] += dev * dev;
        }
      }
      for (auto& x : row.std) x = std::sqrt(x / (n - 1.0));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace optail
