#include "optail/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "optail/analysis.hpp"
#include "optail/json_io.hpp"
#include "optail/opt_ail.hpp"
#include "optail/oracles.hpp"
#include "optail/q_learner.hpp"
#include "optail/rng.hpp"
#include "optail/simulator.hpp"

namespace optail {

namespace {

TabularMdp random_garnet(SplitMix64& rng, int max_s, int max_a, int max_h) {
  EnvSpec spec;
  spec.family = EnvFamily::garnet_random;
  spec.num_states = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_s - 1)));
  spec.num_actions = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_a)));
  spec.horizon = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_h)));
  spec.branching = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_states)));
  spec.seed = rng();
  return instantiate(spec);
}

RewardTable random_reward(const Shape& shape, SplitMix64& rng) {
  RewardTable r(shape);
  for (auto& v : r.values) v = rng.uniform();
  return r;
}

Policy random_policy(const Shape& shape, SplitMix64& rng) {
  std::vector<double> p(shape.cells());
  for (int h = 0; h < shape.horizon; ++h) {
    for (int s = 0; s < shape.num_states; ++s) {
      double total = 0.0;
      for (int a = 0; a < shape.num_actions; ++a) total += p[shape.index(h, s, a)] = rng.exponential();
      for (int a = 0; a < shape.num_actions; ++a) p[shape.index(h, s, a)] /= total;
    }
  }
  return Policy::stochastic(shape, std::move(p));
}

Dataset uniform_data(const TabularMdp& mdp, int n, std::uint64_t seed) {
  Dataset d;
  const auto pi = Policy::uniform(mdp.shape);
  for (int i = 0; i < n; ++i) d.trajectories.push_back(rollout(mdp, pi, derive_seed(seed, 0, i)));
  return d;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

CheckResult value_iteration_residual() {
  SplitMix64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto mdp = random_garnet(rng, 10, 4, 8);
    const auto vi = value_iteration(mdp, mdp.true_reward);
    worst = std::max(worst, bellman_residual(mdp, mdp.true_reward, vi.q_star));
  }
  return {"value iteration is a Bellman fixed point", worst <= 1e-10, "max residual " + fmt(worst)};
}

CheckResult occupancy_identity() {
  SplitMix64 rng(12);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto mdp = random_garnet(rng, 10, 4, 8);
    const auto r = random_reward(mdp.shape, rng);
    const auto pi = random_policy(mdp.shape, rng);
    worst = std::max(worst, std::abs(occupancy_value(occupancy_measure(mdp, pi), r) -
                                     policy_value(mdp, r, pi)));
  }
  return {"occupancy value equals policy value", worst <= 1e-10, "max error " + fmt(worst)};
}

CheckResult optimal_dominates_enumeration() {
  EnvSpec spec;
  spec.family = EnvFamily::garnet_random;
  spec.num_states = 2;
  spec.num_actions = 2;
  spec.horizon = 2;
  spec.branching = 2;
  spec.reward_density = 1.0;
  spec.seed = 3;
  const auto mdp = instantiate(spec);
  const double v_star = value_iteration(mdp, mdp.true_reward).v_star;
  double best = -1.0;
  for (int code = 0; code < 16; ++code) {
    const std::vector<int> actions = {code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1};
    best = std::max(best, policy_value(mdp, mdp.true_reward, Policy::deterministic(mdp.shape, actions)));
  }
  return {"optimal value dominates all 16 deterministic policies",
          v_star >= best - 1e-12 && std::abs(v_star - best) <= 1e-12,
          "v* " + fmt(v_star) + ", best enumerated " + fmt(best)};
}

CheckResult perturbation_bound() {
  SplitMix64 rng(13);
  double worst = -1e300;
  for (int i = 0; i < 100; ++i) {
    const auto mdp = random_garnet(rng, 8, 3, 6);
    const auto gap = perturbation_gap(mdp, random_reward(mdp.shape, rng), random_reward(mdp.shape, rng));
    for (std::size_t h = 0; h < gap.lhs.size(); ++h) worst = std::max(worst, gap.lhs[h] - gap.rhs[h]);
  }
  return {"optimal Q moves at most the tail sum of reward changes", worst <= 1e-10,
          "max excess " + fmt(worst)};
}

CheckResult bellman_error_forms() {
  SplitMix64 rng(14);
  double worst_gap = 0.0;
  double lowest = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto mdp = random_garnet(rng, 6, 3, 5);
    const auto data = uniform_data(mdp, 15, rng());
    const auto r = random_reward(mdp.shape, rng);
    QTable q(mdp.shape);
    for (auto& v : q.values) v = rng.uniform() * mdp.horizon();
    const double direct = be(q, data, r);
    const double closed = be(q, DatasetStats(data, mdp.shape), r);
    worst_gap = std::max(worst_gap, std::abs(direct - closed) / std::max(1.0, std::abs(direct)));
    lowest = std::min(lowest, std::min(direct, closed));
  }
  return {"Bellman error: closed form matches definition and is nonnegative",
          worst_gap <= 1e-9 && lowest >= -1e-10,
          "max relative gap " + fmt(worst_gap) + ", min value " + fmt(lowest)};
}

CheckResult subgradient_finite_differences() {
  SplitMix64 rng(15);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto mdp = random_garnet(rng, 5, 3, 4);
    const DatasetStats stats(uniform_data(mdp, 10, rng()), mdp.shape);
    const auto r = random_reward(mdp.shape, rng);
    QTable q(mdp.shape);
    for (auto& v : q.values) v = rng.uniform() * mdp.horizon();
    const double lambda = 0.7;
    const auto ev = evaluate_objective(q, stats, r, mdp.initial_state, lambda);
    const auto c = static_cast<std::size_t>(rng.below(q.values.size()));
    const double step = 1e-6;
    QTable up = q, down = q;
    up.values[c] += step;
    down.values[c] -= step;
    const double fd = (evaluate_objective(up, stats, r, mdp.initial_state, lambda, false, false).objective -
                       evaluate_objective(down, stats, r, mdp.initial_state, lambda, false, false).objective) /
                      (2 * step);
    worst = std::max(worst, std::abs(fd - ev.subgradient[c]) / std::max(1.0, std::abs(fd)));
  }
  return {"objective subgradient matches finite differences", worst <= 1e-4,
          "max relative error " + fmt(worst)};
}

CheckResult gap_identity_and_determinism() {
  RunConfig cfg;
  cfg.env.family = EnvFamily::combination_lock;
  cfg.env.horizon = 5;
  cfg.iterations = 40;
  cfg.seed = 5;
  const auto a = run_opt_ail(cfg);
  const auto b = run_opt_ail(cfg);
  double worst = 0.0;
  for (const auto& row : a.log) {
    worst = std::max(worst, std::abs(row.gap - (row.reward_error + row.policy_error)));
  }
  bool same = a.log.size() == b.log.size();
  for (std::size_t i = 0; same && i < a.log.size(); ++i) {
    same = a.log[i].reward_digest == b.log[i].reward_digest && a.log[i].gap == b.log[i].gap;
  }
  return {"gap splits into reward and policy error; runs are reproducible",
          worst <= 1e-9 && same, "max identity error " + fmt(worst) + (same ? "" : ", runs differ")};
}

CheckResult json_round_trip() {
  SplitMix64 rng(16);
  bool ok = true;
  for (int i = 0; i < 10 && ok; ++i) {
    const auto mdp = random_garnet(rng, 6, 3, 4);
    ok = mdp_from_json(json::parse(to_json(mdp).dump())) == mdp;
  }
  return {"MDP JSON round trip is exact", ok, ok ? "" : "mismatch after round trip"};
}

}  // namespace

std::vector<CheckResult> run_self_checks(std::ostream& log) {
  const std::vector<std::function<CheckResult()>> checks = {
      value_iteration_residual,      occupancy_identity,      optimal_dominates_enumeration,
      perturbation_bound,            bellman_error_forms,     subgradient_finite_differences,
      gap_identity_and_determinism,  json_round_trip};
  std::vector<CheckResult> results;
  for (const auto& check : checks) {
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("threw: ") + e.what();
    }
    log << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) log << " (" << r.detail << ")";
    log << '\n';
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace optail
