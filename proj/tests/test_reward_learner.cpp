#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "doctest.h"
#include "optail/opt_ail.hpp"
#include "optail/oracles.hpp"
#include "optail/reward_learner.hpp"
#include "support.hpp"

using namespace optail;

namespace {

Trajectory path(std::vector<std::pair<int, int>> sa) {
  Trajectory t;
  for (auto [s, a] : sa) t.steps.push_back({s, a});
  return t;
}

Dataset demos_of(std::vector<Trajectory> ts) {
  return Dataset{std::move(ts), DatasetRole::expert_demos};
}

RewardLossGradient raw_gradient(Shape shape, std::vector<double> values) {
  return RewardLossGradient{shape, std::move(values), 0};
}

// max over the 2^d vertices of sum_k [<g_k, r_k> - <g_k, v>], divided by K.
double vertex_regret(const std::vector<RewardLossGradient>& gs, const std::vector<RewardTable>& rs) {
  const std::size_t d = gs.front().values.size();
  double played = 0.0;
  for (std::size_t k = 0; k < gs.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) played += gs[k].values[i] * rs[k].values[i];
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    double cmp = 0.0;
    for (const auto& g : gs) {
      for (std::size_t i = 0; i < d; ++i) cmp += g.values[i] * ((mask >> i) & 1);
    }
    best = std::max(best, played - cmp);
  }
  return best / static_cast<double>(gs.size());
}

}  // namespace

TEST_SUITE("reward_learner") {

TEST_CASE("empirical policy value") {
  const Shape shp{3, 2, 2};
  const auto t = path({{0, 1}, {1, 0}, {1, 1}});
  CHECK(empirical_policy_value(t, RewardTable(shp, 0.0)) == 0.0);
  CHECK(empirical_policy_value(t, RewardTable(shp, 1.0)) == 3.0);

  SplitMix64 rng(1);
  const auto r = testing::random_reward(shp, rng);
  std::vector<double> counts(shp.cells(), 0.0);
  counts[shp.index(0, 0, 1)] += 1;
  counts[shp.index(1, 1, 0)] += 1;
  counts[shp.index(2, 1, 1)] += 1;
  double dot = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) dot += counts[i] * r.values[i];
  CHECK(empirical_policy_value(t, r) == doctest::Approx(dot).epsilon(1e-15));
}

TEST_CASE("empirical expert value") {
  const Shape shp{2, 2, 2};
  SplitMix64 rng(2);
  const auto r = testing::random_reward(shp, rng);
  const auto t1 = path({{0, 0}, {1, 1}});
  const auto t2 = path({{0, 1}, {0, 0}});
  CHECK(empirical_expert_value(demos_of({t1}), r) == empirical_policy_value(t1, r));
  CHECK(empirical_expert_value(demos_of({t1, t2}), RewardTable(shp, 1.0)) == 2.0);

  RewardTable fixed(shp);
  fixed.values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  // t1: r_0(0,0)=0.1, r_1(1,1)=0.8; t2: r_0(0,1)=0.2, r_1(0,0)=0.5.
  CHECK(empirical_expert_value(demos_of({t1, t2}), fixed) == doctest::Approx((0.9 + 0.7) / 2));
  CHECK_THROWS_AS(empirical_expert_value(Dataset{}, fixed), std::invalid_argument);
}

TEST_CASE("unbiasedness of the empirical value") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    const auto mdp = testing::random_garnet(rng, 5, 3, 5);
    const auto pi = testing::random_policy(mdp.shape, rng);
    const auto r = testing::random_reward(mdp.shape, rng);
    const int M = 20000;
    double sum = 0.0;
    for (int i = 0; i < M; ++i) sum += empirical_policy_value(rollout(mdp, pi, rng()), r);
    CHECK(std::abs(sum / M - policy_value(mdp, r, pi)) <= 3.0 * mdp.horizon() / (2.0 * std::sqrt(M)));
  }
}

TEST_CASE("loss gradient") {
  const Shape shp{2, 3, 2};
  SUBCASE("learner identical to the single demo cancels") {
    const auto t = path({{0, 1}, {2, 0}});
    const auto g = loss_gradient(t, demos_of({t}), shp);
    for (double v : g.values) CHECK(v == 0.0);
  }
  SUBCASE("disjoint visits") {
    const auto learner = path({{0, 0}, {1, 0}});
    const auto e1 = path({{0, 1}, {2, 1}});
    const auto e2 = path({{0, 1}, {2, 0}});
    const auto g = loss_gradient(learner, demos_of({e1, e2}), shp);
    CHECK(g.values[shp.index(0, 0, 0)] == 1.0);
    CHECK(g.values[shp.index(1, 1, 0)] == 1.0);
    CHECK(g.values[shp.index(0, 0, 1)] == -1.0);
    CHECK(g.values[shp.index(1, 2, 1)] == -0.5);
    CHECK(g.values[shp.index(1, 2, 0)] == -0.5);
    double total = 0.0;
    for (double v : g.values) total += v;
    CHECK(total == doctest::Approx(0.0));
  }
  SUBCASE("linearity against direct evaluation") {
    SplitMix64 rng(4);
    const auto mdp = testing::random_garnet(rng, 6, 3, 5);
    const auto pi = testing::random_policy(mdp.shape, rng);
    Dataset demos;
    for (int i = 0; i < 4; ++i) demos.trajectories.push_back(rollout(mdp, pi, rng()));
    const auto ti = rollout(mdp, testing::random_policy(mdp.shape, rng), rng());
    const auto g = loss_gradient(ti, demos, mdp.shape);
    for (double v : g.values) CHECK((v >= -1.0 && v <= 1.0));
    for (int i = 0; i < 20; ++i) {
      const auto r = testing::random_reward(mdp.shape, rng);
      const double direct = empirical_policy_value(ti, r) - empirical_expert_value(demos, r);
      CHECK(std::abs(g.dot(r) - direct) <= 1e-12);
    }
  }
}

TEST_CASE("OGD update") {
  const Shape shp{1, 1, 4};
  RewardLearnerConfig cfg;
  cfg.total_rounds = 1;
  auto st = init_reward_learner(shp, cfg);
  SUBCASE("zero gradient is a fixed point") {
    const auto next = ogd_update(st, raw_gradient(shp, {0, 0, 0, 0}));
    CHECK(next.reward == st.reward);
    CHECK(next.rounds == 1);
  }
  SUBCASE("boundary projection") {
    CHECK(ogd_step_size(st) == 1.0);
    const auto next = ogd_update(st, raw_gradient(shp, {1, -1, 0.25, 0}));
    CHECK(next.reward.values == std::vector<double>{0.0, 1.0, 0.25, 0.5});
  }
  SUBCASE("step size schedules") {
    cfg = default_reward_config(Shape{4, 5, 3}, 100);
    CHECK(cfg.diameter == doctest::Approx(std::sqrt(60.0)));
    CHECK(cfg.gradient_bound == doctest::Approx(std::sqrt(8.0)));
    st = init_reward_learner(Shape{4, 5, 3}, cfg);
    CHECK(ogd_step_size(st) == doctest::Approx(std::sqrt(60.0) / (std::sqrt(8.0) * 10.0)));
    cfg.schedule = StepSchedule::anytime;
    st = init_reward_learner(Shape{4, 5, 3}, cfg);
    CHECK(ogd_step_size(st) == doctest::Approx(std::sqrt(60.0) / std::sqrt(8.0)));
    cfg.init = RewardInit::zero;
    for (double v : init_reward_learner(Shape{4, 5, 3}, cfg).reward.values) CHECK(v == 0.0);
  }
}

TEST_CASE("OGD regret on adversarial linear losses") {
  const Shape shp{1, 1, 4};
  const int K = 400;
  const double D = 2.0, G = 2.0;  // box [0,1]^4; gradients in {-1, 1}^4
  RewardLearnerConfig cfg;
  cfg.total_rounds = K;
  cfg.diameter = D;
  cfg.gradient_bound = G;

  using Adversary = std::function<std::vector<double>(const RewardTable&, int)>;
  const std::vector<std::pair<const char*, Adversary>> adversaries = {
      {"push away from the iterate",
       [](const RewardTable& r, int) {
         std::vector<double> g(4);
         for (int i = 0; i < 4; ++i) g[i] = r.values[i] >= 0.5 ? 1.0 : -1.0;
         return g;
       }},
      {"alternating signs",
       [](const RewardTable&, int k) {
         const double s = k % 2 ? 1.0 : -1.0;
         return std::vector<double>{s, -s, s, 1.0};
       }},
      {"drifting bias",
       [](const RewardTable&, int k) {
         return std::vector<double>{k < 200 ? 1.0 : -1.0, k % 3 ? 1.0 : -1.0, -1.0, k % 7 ? -1.0 : 1.0};
       }},
  };
  for (const auto& [name, adversary] : adversaries) {
    CAPTURE(name);
    auto st = init_reward_learner(shp, cfg);
    std::vector<RewardLossGradient> gs;
    std::vector<RewardTable> rs;
    for (int k = 0; k < K; ++k) {
      gs.push_back(raw_gradient(shp, adversary(st.reward, k)));
      rs.push_back(st.reward);
      st = ogd_update(st, gs.back());
    }
    const double exact = reward_opt_error(gs, rs);
    CHECK(exact <= D * G / std::sqrt(K) + 1e-9);
    CHECK(exact == doctest::Approx(vertex_regret(gs, rs)).epsilon(1e-12));
    CHECK(st.average_regret() == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("FTRL update") {
  const Shape shp{1, 2, 3};
  RewardLearnerConfig cfg;
  cfg.algorithm = RewardAlgorithm::ftrl;
  cfg.beta = 0.7;
  auto st = init_reward_learner(shp, cfg);
  SUBCASE("zero sum gives the center") {
    for (double v : ftrl_update(st).reward.values) CHECK(v == 0.5);
  }
  SUBCASE("saturation") {
    st.gradient_sum = {10 * 0.7, -10 * 0.7, 0, 0, 0, 0};
    const auto next = ftrl_update(st);
    CHECK(next.reward.values[0] == 0.0);
    CHECK(next.reward.values[1] == 1.0);
  }
  SUBCASE("matches a per-coordinate grid search") {
    SplitMix64 rng(5);
    for (auto& g : st.gradient_sum) g = (rng.uniform() - 0.5) * 3.0;
    const auto next = ftrl_update(st);
    for (std::size_t i = 0; i < 6; ++i) {
      const double g = st.gradient_sum[i];
      double best_x = 0.0, best = std::numeric_limits<double>::infinity();
      for (int j = 0; j <= 1000; ++j) {
        const double x = j * 1e-3;
        const double f = g * x + 0.7 * (x - 0.5) * (x - 0.5);
        if (f < best) best = f, best_x = x;
      }
      CHECK(std::abs(next.reward.values[i] - best_x) <= 1e-3);
    }
  }
  SUBCASE("reward_update accumulates before the FTRL step") {
    const auto next = reward_update(st, raw_gradient(shp, {1.4, 0, 0, 0, 0, -0.7}));
    CHECK(next.rounds == 1);
    CHECK(next.reward.values[0] == 0.0);  // 1/2 - 1.4 / 1.4 clipped
    CHECK(next.reward.values[5] == doctest::Approx(1.0));
  }
  SUBCASE("non-positive beta is rejected") {
    st.config.beta = 0.0;
    CHECK_THROWS_AS(ftrl_update(st), std::invalid_argument);
  }
}

TEST_CASE("exact reward optimization error") {
  const Shape shp{1, 1, 4};
  SUBCASE("self-comparator") {
    RewardTable r(shp);
    r.values = {0, 1, 0, 1};
    CHECK(reward_opt_error({raw_gradient(shp, {1, -1, 0.5, -0.5})}, {r}) == 0.0);
  }
  SUBCASE("constant losses") {
    SplitMix64 rng(6);
    CHECK(reward_opt_error({raw_gradient(shp, {0, 0, 0, 0}), raw_gradient(shp, {0, 0, 0, 0})},
                           {testing::random_reward(shp, rng), testing::random_reward(shp, rng)}) == 0.0);
  }
  SUBCASE("random histories match vertex enumeration") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<RewardLossGradient> gs;
      std::vector<RewardTable> rs;
      for (int k = 0; k < 3; ++k) {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.uniform() * 2 - 1;
        gs.push_back(raw_gradient(shp, v));
        rs.push_back(testing::random_reward(shp, rng));
      }
      const double e = reward_opt_error(gs, rs);
      CHECK(e == doctest::Approx(vertex_regret(gs, rs)).epsilon(1e-12));
    }
  }
  SUBCASE("a constant played reward never beats the best fixed one") {
    // With varying r^k the average can go negative; a fixed play is itself a comparator.
    SplitMix64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const auto r = testing::random_reward(shp, rng);
      std::vector<RewardLossGradient> gs;
      for (int k = 0; k < 5; ++k) {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.uniform() * 2 - 1;
        gs.push_back(raw_gradient(shp, v));
      }
      CHECK(reward_opt_error(gs, std::vector<RewardTable>(5, r)) >= -1e-10);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(reward_opt_error({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(reward_opt_error({raw_gradient(shp, {0, 0, 0, 0})}, {}), std::invalid_argument);
  }
}

TEST_CASE("no-regret along real runs") {
  for (auto family : {EnvFamily::combination_lock, EnvFamily::gridworld, EnvFamily::garnet_random}) {
    RunConfig cfg;
    cfg.env.family = family;
    cfg.env.horizon = 5;
    cfg.iterations = 40;
    cfg.seed = 3;
    const auto mdp = instantiate(cfg.env);
    const auto rc = default_reward_config(mdp.shape, cfg.iterations);
    const auto rec = run_opt_ail(cfg);
    const double bound = rc.diameter * rc.gradient_bound / std::sqrt(cfg.iterations);
    CHECK(rec.eps_r_opt <= bound + 1e-9);
  }
}

}
