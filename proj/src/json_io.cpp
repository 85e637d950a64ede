#include "optail/json_io.hpp"

#include <stdexcept>

namespace optail {
namespace {

json dims(const Shape& shp) {
  return json{{"num_states", shp.num_states},
              {"num_actions", shp.num_actions},
              {"horizon", shp.horizon}};
}

Shape read_dims(const json& j) {
  Shape shp{j.at("horizon").get<int>(), j.at("num_states").get<int>(),
            j.at("num_actions").get<int>()};
  if (!shp.valid()) throw std::invalid_argument("json: non-positive dimension");
  return shp;
}

json nest_hsa(const Shape& shp, const std::vector<double>& v) {
  json out = json::array();
  for (int h = 0; h < shp.horizon; ++h) {
    json hs = json::array();
    for (int s = 0; s < shp.num_states; ++s) {
      json row = json::array();
      for (int a = 0; a < shp.num_actions; ++a) row.push_back(v[shp.index(h, s, a)]);
      hs.push_back(std::move(row));
    }
    out.push_back(std::move(hs));
  }
  return out;
}

std::vector<double> flat_hsa(const Shape& shp, const json& j, const char* key) {
  std::vector<double> v(shp.cells());
  const json& arr = j.at(key);
  if (arr.size() != static_cast<std::size_t>(shp.horizon)) {
    throw std::invalid_argument(std::string("json: ") + key + " has wrong horizon length");
  }
  for (int h = 0; h < shp.horizon; ++h) {
    const json& hs = arr.at(h);
    if (hs.size() != static_cast<std::size_t>(shp.num_states)) {
      throw std::invalid_argument(std::string("json: ") + key + " has wrong state count");
    }
    for (int s = 0; s < shp.num_states; ++s) {
      const json& row = hs.at(s);
      if (row.size() != static_cast<std::size_t>(shp.num_actions)) {
        throw std::invalid_argument(std::string("json: ") + key + " has wrong action count");
      }
      for (int a = 0; a < shp.num_actions; ++a) v[shp.index(h, s, a)] = row.at(a).get<double>();
    }
  }
  return v;
}

const char* role_name(DatasetRole r) {
  return r == DatasetRole::expert_demos ? "expert_demos" : "learner_buffer";
}

}  // namespace

json to_json(const TabularMdp& mdp) {
  const Shape& shp = mdp.shape;
  json j = dims(shp);
  j["initial_state"] = mdp.initial_state;
  json trans = json::array();
  for (int h = 0; h < shp.horizon; ++h) {
    json hs = json::array();
    for (int s = 0; s < shp.num_states; ++s) {
      json as = json::array();
      for (int a = 0; a < shp.num_actions; ++a) {
        json row = json::array();
        for (double p : mdp.next_dist(h, s, a)) row.push_back(p);
        as.push_back(std::move(row));
      }
      hs.push_back(std::move(as));
    }
    trans.push_back(std::move(hs));
  }
  j["transitions"] = std::move(trans);
  j["reward"] = nest_hsa(shp, mdp.true_reward.values);
  return j;
}

json to_json(const RewardTable& reward) {
  json j = dims(reward.shape);
  j["reward"] = nest_hsa(reward.shape, reward.values);
  return j;
}

json to_json(const QTable& q) {
  json j = dims(q.shape);
  j["q"] = nest_hsa(q.shape, q.values);
  return j;
}

json to_json(const Policy& policy) {
  json j = dims(policy.shape);
  j["kind"] = policy.kind == PolicyKind::deterministic ? "deterministic" : "stochastic";
  j["probs"] = nest_hsa(policy.shape, policy.probs);
  return j;
}

json to_json(const Dataset& dataset) {
  json trajs = json::array();
  for (const auto& t : dataset.trajectories) {
    json states = json::array();
    json actions = json::array();
    for (const auto& st : t.steps) {
      states.push_back(st.state);
      actions.push_back(st.action);
    }
    trajs.push_back(json{{"seed", t.seed}, {"states", std::move(states)},
                         {"actions", std::move(actions)}});
  }
  return json{{"role", role_name(dataset.role)}, {"trajectories", std::move(trajs)}};
}

TabularMdp mdp_from_json_unchecked(const json& j) {
  TabularMdp mdp;
  mdp.shape = read_dims(j);
  const Shape& shp = mdp.shape;
  mdp.initial_state = j.at("initial_state").get<int>();
  const json& trans = j.at("transitions");
  if (trans.size() != static_cast<std::size_t>(shp.horizon)) {
    throw std::invalid_argument("json: transitions has wrong horizon length");
  }
  mdp.transitions.reserve(shp.cells() * shp.num_states);
  for (int h = 0; h < shp.horizon; ++h) {
    const json& hs = trans.at(h);
    if (hs.size() != static_cast<std::size_t>(shp.num_states)) {
      throw std::invalid_argument("json: transitions has wrong state count");
    }
    for (int s = 0; s < shp.num_states; ++s) {
      const json& as = hs.at(s);
      if (as.size() != static_cast<std::size_t>(shp.num_actions)) {
        throw std::invalid_argument("json: transitions has wrong action count");
      }
      for (int a = 0; a < shp.num_actions; ++a) {
        const json& row = as.at(a);
        if (row.size() != static_cast<std::size_t>(shp.num_states)) {
          throw std::invalid_argument("json: transition row has wrong length");
        }
        for (const auto& p : row) mdp.transitions.push_back(p.get<double>());
      }
    }
  }
  mdp.true_reward = RewardTable(shp);
  mdp.true_reward.values = flat_hsa(shp, j, "reward");
  return mdp;
}

TabularMdp mdp_from_json(const json& j) {
  TabularMdp raw = mdp_from_json_unchecked(j);
  return make_mdp(raw.shape, raw.initial_state, std::move(raw.transitions),
                  std::move(raw.true_reward));
}

RewardTable reward_from_json(const json& j) {
  RewardTable r(read_dims(j));
  r.values = flat_hsa(r.shape, j, "reward");
  if (!r.in_class()) throw std::invalid_argument("json: reward outside [0, 1]");
  return r;
}

QTable qtable_from_json(const json& j) {
  QTable q(read_dims(j));
  q.values = flat_hsa(q.shape, j, "q");
  return q;
}

Policy policy_from_json(const json& j) {
  const Shape shp = read_dims(j);
  auto probs = flat_hsa(shp, j, "probs");
  const auto kind = j.at("kind").get<std::string>();
  Policy p = Policy::stochastic(shp, std::move(probs));
  if (kind == "deterministic") {
    for (double v : p.probs) {
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("json: deterministic policy not one-hot");
    }
    p.kind = PolicyKind::deterministic;
  } else if (kind != "stochastic") {
    throw std::invalid_argument("json: unknown policy kind '" + kind + "'");
  }
  return p;
}

Dataset dataset_from_json(const json& j) {
  Dataset d;
  const auto role = j.at("role").get<std::string>();
  if (role == "expert_demos") {
    d.role = DatasetRole::expert_demos;
  } else if (role == "learner_buffer") {
    d.role = DatasetRole::learner_buffer;
  } else {
    throw std::invalid_argument("json: unknown dataset role '" + role + "'");
  }
  for (const auto& jt : j.at("trajectories")) {
    Trajectory t;
    t.seed = jt.at("seed").get<std::uint64_t>();
    const auto& states = jt.at("states");
    const auto& actions = jt.at("actions");
    if (states.size() != actions.size()) {
      throw std::invalid_argument("json: trajectory states/actions length mismatch");
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      t.steps.push_back({states[i].get<int>(), actions[i].get<int>()});
    }
    d.trajectories.push_back(std::move(t));
  }
  return d;
}

}  // namespace optail
