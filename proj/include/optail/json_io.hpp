#pragma once

// JSON schema for MDPs, rewards, Q-tables, policies, and datasets.
//
//   MDP:     {num_states, num_actions, horizon, initial_state,
//             transitions: [h][s][a][s'], reward: [h][s][a]}
//   reward:  {num_states, num_actions, horizon, reward: [h][s][a]}
//   Q-table: {num_states, num_actions, horizon, q: [h][s][a]}
//   policy:  {num_states, num_actions, horizon, kind, probs: [h][s][a]}
//   dataset: {role, trajectories: [{seed, states: [H], actions: [H]}]}
//
// Doubles are written with shortest round-trip precision, so parse(dump(x))
// reproduces every value bit for bit.

#include "json.hpp"

#include "optail/mdp.hpp"

namespace optail {

using json = nlohmann::json;

json to_json(const TabularMdp& mdp);
json to_json(const RewardTable& reward);
json to_json(const QTable& q);
json to_json(const Policy& policy);
json to_json(const Dataset& dataset);

/// Parsed MDPs go through make_mdp, so invalid input throws.
TabularMdp mdp_from_json(const json& j);
/// Raw parse without validation (for validate_mdp reporting).
TabularMdp mdp_from_json_unchecked(const json& j);
RewardTable reward_from_json(const json& j);
QTable qtable_from_json(const json& j);
Policy policy_from_json(const json& j);
Dataset dataset_from_json(const json& j);

}  // namespace optail
