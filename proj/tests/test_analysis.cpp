#include <cmath>
#include <map>

#include "doctest.h"
#include "optail/analysis.hpp"
#include "optail/opt_ail.hpp"
#include "optail/oracles.hpp"
#include "support.hpp"

using namespace optail;

namespace {

// Unclipped residual q_h - T_h q_{h+1} at every cell.
std::vector<double> residuals(const TabularMdp& mdp, const QTable& q, const RewardTable& r) {
  const auto& shp = mdp.shape;
  std::vector<double> out(shp.cells());
  for (int h = 0; h < shp.horizon; ++h) {
    std::span<const double> q_next;
    if (h + 1 < shp.horizon) q_next = q.step(h + 1);
    const auto t = bellman_backup(q_next, r.step(h), mdp.step_transitions(h), shp.num_states, shp.num_actions);
    for (std::size_t c = 0; c < t.size(); ++c) out[shp.index(h, 0, 0) + c] = q.values[shp.index(h, 0, 0) + c] - t[c];
  }
  return out;
}

QTable random_q(const Shape& shp, SplitMix64& rng) {
  QTable q(shp);
  for (auto& v : q.values) v = rng.uniform() * shp.horizon;
  return q;
}

RunRecord fake_record(std::vector<double> gaps) {
  RunRecord rec;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    IterationLog row;
    row.iteration = static_cast<int>(i + 1);
    row.interactions = row.iteration * 3;
    row.gap = gaps[i];
    row.be = gaps[i] * 2;
    rec.log.push_back(row);
  }
  return rec;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("gap decomposition") {
  SplitMix64 rng(1);
  const auto mdp = testing::random_garnet(rng, 6, 3, 5);
  const auto expert = value_iteration(mdp, mdp.true_reward).greedy;
  std::vector<RewardTable> rewards;
  std::vector<Policy> policies;
  for (int k = 0; k < 6; ++k) {
    rewards.push_back(testing::random_reward(mdp.shape, rng));
    policies.push_back(testing::random_policy(mdp.shape, rng));
  }
  SUBCASE("true rewards leave no reward error") {
    const auto d = decompose_gap(mdp, expert, std::vector<RewardTable>(6, mdp.true_reward), policies);
    CHECK(std::abs(d.reward_error) <= 1e-12);
  }
  SUBCASE("expert policies leave no policy error and no gap") {
    const auto d = decompose_gap(mdp, expert, rewards, std::vector<Policy>(6, expert));
    CHECK(std::abs(d.policy_error) <= 1e-12);
    CHECK(std::abs(d.gap) <= 1e-12);
  }
  SUBCASE("identity against an independent gap") {
    const auto d = decompose_gap(mdp, expert, rewards, policies);
    const double gap = policy_value(mdp, mdp.true_reward, expert) - mixture_value(mdp, mdp.true_reward, policies);
    CHECK(std::abs(d.gap - gap) <= 1e-12);
    CHECK(std::abs(d.gap - (d.reward_error + d.policy_error)) <= 1e-9);
  }
  SUBCASE("identity on a completed run") {
    RunConfig cfg;
    cfg.env.horizon = 6;
    cfg.iterations = 40;
    cfg.keep_artifacts = true;
    const auto m = instantiate(cfg.env);
    const auto rec = run_opt_ail(cfg);
    const auto e = generate_expert(m, cfg.expert, 1, 0).first;
    const auto d = decompose_gap(m, e, rec.artifacts->rewards, rec.artifacts->policies);
    CHECK(std::abs(d.gap - (d.reward_error + d.policy_error)) <= 1e-9);
    CHECK(std::abs(d.gap - rec.imitation_gap) <= 1e-12);
    CHECK(std::abs(d.reward_error - rec.reward_error) <= 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(decompose_gap(mdp, expert, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(decompose_gap(mdp, expert, rewards, {expert}), std::invalid_argument);
  }
}

TEST_CASE("expected squared Bellman error") {
  SplitMix64 rng(2);
  SUBCASE("optimal Q has zero residual") {
    const auto mdp = testing::random_garnet(rng, 6, 3, 5);
    const auto r = testing::random_reward(mdp.shape, rng);
    const auto vi = value_iteration(mdp, r);
    CHECK(std::abs(expected_squared_bellman_error(mdp, vi.q_star, r, testing::random_policy(mdp.shape, rng))) <= 1e-20);
  }
  SUBCASE("H = 1 reduces to a weighted squared difference") {
    const auto mdp = testing::bandit({0.3, 0.8, 0.1});
    QTable q(mdp.shape);
    q.values = {0.5, 0.5, 0.5};
    std::vector<double> p = {0.2, 0.5, 0.3};
    const auto pi = Policy::stochastic(mdp.shape, p);
    const double expected = 0.2 * 0.04 + 0.5 * 0.09 + 0.3 * 0.16;
    CHECK(expected_squared_bellman_error(mdp, q, mdp.true_reward, pi) == doctest::Approx(expected));
  }
  SUBCASE("zero exactly when the residual vanishes on the support") {
    const Shape shp{3, 3, 2};
    const auto mdp = testing::shift_chain(3, 3, 2, testing::random_reward(shp, rng));
    const auto pi = Policy::deterministic(shp, std::vector<int>(9, 0));  // stays in state 0
    auto q = value_iteration(mdp, mdp.true_reward).q_star;
    q(2, 1, 1) += 0.7;  // off the support of pi
    CHECK(expected_squared_bellman_error(mdp, q, mdp.true_reward, pi) == 0.0);
    q(0, 0, 0) += 0.3;  // on it, and step 0 feeds no earlier backup
    CHECK(expected_squared_bellman_error(mdp, q, mdp.true_reward, pi) == doctest::Approx(0.09));
  }
  SUBCASE("matches a Monte-Carlo average over a million rollouts") {
    const auto mdp = testing::random_garnet(rng, 5, 3, 4);
    const auto r = testing::random_reward(mdp.shape, rng);
    const auto q = random_q(mdp.shape, rng);
    const auto pi = testing::random_policy(mdp.shape, rng);
    const auto res = residuals(mdp, q, r);
    const int M = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < M; ++i) {
      const auto t = rollout(mdp, pi, derive_seed(3, 0, i));
      double x = 0.0;
      for (int h = 0; h < mdp.horizon(); ++h) {
        const double e = res[mdp.shape.index(h, t.steps[h].state, t.steps[h].action)];
        x += e * e;
      }
      sum += x;
      sq += x * x;
    }
    const double mean = sum / M;
    const double sigma = std::sqrt((sq / M - mean * mean) * M / (M - 1));
    const double exact = expected_squared_bellman_error(mdp, q, r, pi);
    CHECK(exact >= 0.0);
    CHECK(std::abs(mean - exact) <= 3.0 * sigma / std::sqrt(double(M)));
  }
}

TEST_CASE("complexity witness") {
  SUBCASE("Q tables equal to Q^pi give zero prediction error") {
    SplitMix64 rng(4);
    const auto mdp = testing::random_garnet(rng, 5, 3, 4);
    RunArtifacts art;
    for (int k = 0; k < 4; ++k) {
      art.rewards.push_back(testing::random_reward(mdp.shape, rng));
      art.policies.push_back(testing::random_deterministic(mdp.shape, rng));
      art.q_tables.push_back(policy_evaluation(mdp, art.rewards.back(), art.policies.back()).q_pi);
    }
    const auto g = gec_diagnostic(mdp, art);
    REQUIRE(g.prediction_error.size() == 4);
    for (double e : g.prediction_error) CHECK(std::abs(e) <= 1e-12);
    CHECK(g.best_witness == 0.0);
  }
  SUBCASE("K = 1 has an empty cumulative sum") {
    SplitMix64 rng(5);
    const auto mdp = testing::random_garnet(rng, 5, 3, 4);
    RunArtifacts art{{testing::random_reward(mdp.shape, rng)}, {random_q(mdp.shape, rng)},
                     {testing::random_policy(mdp.shape, rng)}};
    CHECK(gec_diagnostic(mdp, art).cumulative_be == std::vector<double>{0.0});
  }
  SUBCASE("lock run: finite sequences and minimal witnesses") {
    RunConfig cfg;
    cfg.env.horizon = 6;
    cfg.iterations = 60;
    cfg.keep_artifacts = true;
    const auto mdp = instantiate(cfg.env);
    const auto rec = run_opt_ail(cfg);
    const auto g = gec_diagnostic(mdp, *rec.artifacts);
    CHECK(g.label.find("witness") != std::string::npos);
    CHECK(g.epsilon == doctest::Approx(0.1 / 6));
    CHECK(g.mu_grid.size() == 33);
    double P = 0.0, B = 0.0;
    for (std::size_t k = 0; k < g.prediction_error.size(); ++k) {
      CHECK(std::isfinite(g.prediction_error[k]));
      CHECK(g.cumulative_be[k] >= 0.0);
      P += g.prediction_error[k];
      B += g.cumulative_be[k];
    }
    CHECK(g.best_witness >= 0.0);
    const double HK = 6.0 * 60.0, slack = g.epsilon * HK;
    // For each mu the witness is the smallest d with P <= mu B/2 + d/(2 mu) + sqrt(d H K) + eps H K.
    auto holds = [&](double d, double mu) { return P <= mu * B / 2 + d / (2 * mu) + std::sqrt(d * HK) + slack + 1e-9; };
    for (std::size_t i = 0; i < g.mu_grid.size(); ++i) {
      const double mu = g.mu_grid[i];
      double lo = 0.0, hi = 1e12;
      if (!holds(0.0, mu)) {
        for (int it = 0; it < 200; ++it) {
          const double mid = (lo + hi) / 2;
          (holds(mid, mu) ? hi : lo) = mid;
        }
      } else {
        hi = 0.0;
      }
      CHECK(g.mu_witness[i] == doctest::Approx(hi).epsilon(1e-6).scale(1.0));
      CHECK(g.mu_witness[i] <= g.closed_form_witness * (1 + 1e-9) + 1e-9);
    }
    // and the closed form is the smallest d with P - eps H K <= sqrt(d B) + sqrt(d H K)
    const double d = g.closed_form_witness;
    CHECK(std::max(0.0, P - slack) <= std::sqrt(d * B) + std::sqrt(d * HK) + 1e-9);
    if (d > 0) CHECK(P - slack > std::sqrt(0.999 * d * B) + std::sqrt(0.999 * d * HK));
    CHECK(g.best_witness == g.closed_form_witness);
  }
  SUBCASE("inconsistent artifacts are rejected") {
    SplitMix64 rng(6);
    const auto mdp = testing::random_garnet(rng, 3, 2, 2);
    CHECK_THROWS_AS(gec_diagnostic(mdp, RunArtifacts{}), std::invalid_argument);
  }
}

TEST_CASE("aggregation") {
  SUBCASE("identical records") {
    const auto a = aggregate({{1, fake_record({0.5, 0.25})}, {2, fake_record({0.5, 0.25})}});
    CHECK(a.num_records == 2);
    for (const auto& row : a.rows) {
      for (double s : row.std) CHECK(s == 0.0);
    }
  }
  SUBCASE("two-point formula") {
    const double g = 0.3;
    const auto a = aggregate({{1, fake_record({g})}, {2, fake_record({g + 2})}});
    REQUIRE(a.rows.size() == 1);
    CHECK(a.rows[0].mean[0] == doctest::Approx(g + 1));
    CHECK(a.rows[0].std[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(a.rows[0].interactions == 3);
  }
  SUBCASE("single record has zero spread") {
    const auto a = aggregate({{7, fake_record({1.0, 2.0})}});
    for (const auto& row : a.rows) CHECK(row.std[0] == 0.0);
  }
  SUBCASE("five random records against a second implementation") {
    SplitMix64 rng(7);
    std::map<std::uint64_t, RunRecord> recs;
    for (std::uint64_t s = 0; s < 5; ++s) {
      std::vector<double> gaps(4);
      for (auto& x : gaps) x = rng.uniform();
      recs[s] = fake_record(gaps);
    }
    const auto a = aggregate(recs);
    const auto names = metric_names();
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t m = 0; m < names.size(); ++m) {
        std::vector<double> xs;
        for (const auto& [seed, rec] : recs) xs.push_back(metric_values(rec.log[k])[m]);
        double mean = 0.0;
        for (double x : xs) mean += x / xs.size();
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        CHECK(a.rows[k].mean[m] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(a.rows[k].std[m] == doctest::Approx(std::sqrt(ss / 4)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate({{1, fake_record({1.0, 2.0})}, {2, fake_record({1.0})}}), std::invalid_argument);
  }
}

}
