#include <cmath>

#include "doctest.h"
#include "optail/json_io.hpp"
#include "optail/mdp.hpp"
#include "support.hpp"

using namespace optail;

namespace {

TabularMdp two_state() {
  const Shape shp{2, 2, 2};
  std::vector<double> p(shp.cells() * 2);
  for (std::size_t row = 0; row < shp.cells(); ++row) {
    p[row * 2] = 0.25;
    p[row * 2 + 1] = 0.75;
  }
  return TabularMdp{shp, 0, p, RewardTable(shp, 0.5)};
}

bool names_cell(const ValidationReport& r, int h, int s, int a, const std::string& fragment) {
  for (const auto& v : r.violations) {
    if (v.h == h && v.s == s && v.a == a && v.what.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("mdp_core") {

TEST_CASE("well-formed two-state MDP validates") {
  const auto mdp = two_state();
  const auto report = validate_mdp(mdp);
  CHECK(report.ok());
  CHECK(report.summary() == "ok");
}

TEST_CASE("transition row summing to 0.9 is reported at its cell") {
  auto mdp = two_state();
  mdp.transitions[mdp.shape.index(1, 0, 1) * 2 + 1] = 0.65;
  const auto report = validate_mdp(mdp);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.size() == 1);
  CHECK(names_cell(report, 1, 0, 1, "sums to 0.9"));
}

TEST_CASE("reward of 1.5 is reported as out of bounds") {
  auto mdp = two_state();
  mdp.true_reward(0, 1, 0) = 1.5;
  const auto report = validate_mdp(mdp);
  REQUIRE_FALSE(report.ok());
  CHECK(names_cell(report, 0, 1, 0, "outside [0, 1]"));
}

TEST_CASE("other structural violations") {
  auto mdp = two_state();
  mdp.initial_state = 2;
  CHECK_FALSE(validate_mdp(mdp).ok());
  mdp = two_state();
  mdp.transitions[0] = -0.25;
  mdp.transitions[1] = 1.25;
  CHECK(names_cell(validate_mdp(mdp), 0, 0, 0, "negative"));
  mdp = two_state();
  mdp.transitions.pop_back();
  CHECK_FALSE(validate_mdp(mdp).ok());
}

TEST_CASE("make_mdp renormalizes float noise and rejects real errors") {
  const auto base = two_state();
  auto p = base.transitions;
  p[0] += 5e-10;  // row 0 sums to 1 + 5e-10
  const auto fixed = make_mdp(base.shape, 0, p, base.true_reward);
  double sum = fixed.transitions[0] + fixed.transitions[1];
  CHECK(std::abs(sum - 1.0) <= kStochasticTol);

  p = base.transitions;
  p[0] += 1e-6;
  CHECK_THROWS_AS(make_mdp(base.shape, 0, p, base.true_reward), std::invalid_argument);

  // Exact rows pass through untouched.
  const auto same = make_mdp(base.shape, 0, base.transitions, base.true_reward);
  CHECK(same.transitions == base.transitions);
}

TEST_CASE("policy factories produce valid rows") {
  const Shape shp{3, 2, 4};
  const auto u = Policy::uniform(shp);
  for (double v : u.probs) CHECK(v == 0.25);

  const std::vector<int> actions = {0, 3, 1, 2, 2, 0};
  const auto d = Policy::deterministic(shp, actions);
  CHECK(d.kind == PolicyKind::deterministic);
  for (int h = 0; h < 3; ++h) {
    for (int s = 0; s < 2; ++s) {
      CHECK(d.action(h, s) == actions[h * 2 + s]);
      double sum = 0.0;
      for (double v : d.row(h, s)) {
        CHECK((v == 0.0 || v == 1.0));
        sum += v;
      }
      CHECK(sum == 1.0);
    }
  }
  CHECK_THROWS_AS(Policy::deterministic(shp, std::vector<int>{0, 4, 0, 0, 0, 0}),
                  std::invalid_argument);

  std::vector<double> probs(shp.cells(), 0.25);
  probs[0] = 0.25 + 1e-10;
  const auto s = Policy::stochastic(shp, probs);
  double sum = 0.0;
  for (double v : s.row(0, 0)) sum += v;
  CHECK(std::abs(sum - 1.0) <= kStochasticTol);
  probs[0] = 0.3;
  CHECK_THROWS_AS(Policy::stochastic(shp, probs), std::invalid_argument);
  probs[0] = -0.25;
  probs[1] = 0.75;
  CHECK_THROWS_AS(Policy::stochastic(shp, probs), std::invalid_argument);
}

TEST_CASE("class membership of rewards and Q tables") {
  const Shape shp{2, 1, 1};
  RewardTable r(shp, 0.5);
  CHECK(r.in_class());
  r.values[1] = 1.0000001;
  CHECK_FALSE(r.in_class());
  QTable q(shp, 2.0);
  CHECK(q.in_class());
  q.values[0] = 2.5;
  CHECK_FALSE(q.in_class());
}

TEST_CASE("greedy tie-break picks the lowest index") {
  const Shape shp{1, 1, 4};
  QTable q(shp);
  q.values = {0.5, 0.9, 0.9, 0.1};
  CHECK(q.argmax_at(0, 0) == 1);
  CHECK(q.max_at(0, 0) == 0.9);
}

TEST_CASE("trajectory bounds") {
  const Shape shp{2, 3, 2};
  CHECK(trajectory_fits(Trajectory{{{0, 1}, {2, 0}}, 0}, shp));
  CHECK_FALSE(trajectory_fits(Trajectory{{{0, 1}}, 0}, shp));
  CHECK_FALSE(trajectory_fits(Trajectory{{{0, 2}, {2, 0}}, 0}, shp));
  CHECK_FALSE(trajectory_fits(Trajectory{{{3, 0}, {2, 0}}, 0}, shp));
}

TEST_CASE("serialization round trips are bit-identical") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto mdp = testing::random_garnet(rng, 7, 4, 5);
    const auto text = to_json(mdp).dump();
    const auto back = mdp_from_json(json::parse(text));
    CHECK(back == mdp);
    CHECK(to_json(back).dump() == text);

    const auto r = testing::random_reward(mdp.shape, rng);
    CHECK(reward_from_json(json::parse(to_json(r).dump())) == r);

    QTable q(mdp.shape);
    for (auto& v : q.values) v = rng.uniform() * mdp.horizon();
    CHECK(qtable_from_json(json::parse(to_json(q).dump())) == q);

    const auto pi = testing::random_policy(mdp.shape, rng);
    CHECK(policy_from_json(json::parse(to_json(pi).dump())) == pi);
    const auto det = testing::random_deterministic(mdp.shape, rng);
    CHECK(policy_from_json(json::parse(to_json(det).dump())) == det);

    Dataset d;
    d.role = trial % 2 ? DatasetRole::expert_demos : DatasetRole::learner_buffer;
    for (int i = 0; i < 3; ++i) d.trajectories.push_back(rollout(mdp, pi, rng()));
    CHECK(dataset_from_json(json::parse(to_json(d).dump())) == d);
  }
}

TEST_CASE("JSON layout uses the documented keys and nesting") {
  const auto mdp = two_state();
  const auto j = to_json(mdp);
  CHECK(j.at("num_states") == 2);
  CHECK(j.at("num_actions") == 2);
  CHECK(j.at("horizon") == 2);
  CHECK(j.at("initial_state") == 0);
  CHECK(j.at("transitions")[1][0][1][1] == 0.75);
  CHECK(j.at("reward")[1][1][0] == 0.5);
}

TEST_CASE("malformed JSON documents are rejected") {
  auto j = to_json(two_state());
  j["transitions"][0][0][0] = json::array({0.5, 0.4});
  CHECK_THROWS(mdp_from_json(j));
  j = to_json(two_state());
  j["reward"][0].erase(1);
  CHECK_THROWS(mdp_from_json(j));
  auto pj = to_json(Policy::uniform(Shape{1, 1, 2}));
  pj["kind"] = "deterministic";
  CHECK_THROWS(policy_from_json(pj));
}

}
