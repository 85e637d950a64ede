#pragma once

// Domain types for episodic finite-horizon MDPs.
//
// Steps are 0-based in code: h = 0 .. horizon-1 is the first .. last
// decision step. Every (h, s, a) table is stored dense and row-major with
// index (h * S + s) * A + a.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace optail {

/// Tolerance for stochasticity checks on transition rows and policies.
inline constexpr double kStochasticTol = 1e-12;
/// Rows within this distance of 1 are renormalized by constructors.
inline constexpr double kRenormalizeTol = 1e-9;

struct Shape {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;

  std::size_t cells() const {
    return static_cast<std::size_t>(horizon) * num_states * num_actions;
  }
  std::size_t step_cells() const {
    return static_cast<std::size_t>(num_states) * num_actions;
  }
  std::size_t index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  bool valid() const { return horizon > 0 && num_states > 0 && num_actions > 0; }

  bool operator==(const Shape&) const = default;
};

/// Member of the reward class: r_h(s, a) in [0, 1].
struct RewardTable {
  Shape shape;
  std::vector<double> values;

  RewardTable() = default;
  explicit RewardTable(Shape shp, double fill = 0.0)
      : shape(shp), values(shp.cells(), fill) {}

  double operator()(int h, int s, int a) const { return values[shape.index(h, s, a)]; }
  double& operator()(int h, int s, int a) { return values[shape.index(h, s, a)]; }

  std::span<const double> step(int h) const {
    return {values.data() + shape.index(h, 0, 0), shape.step_cells()};
  }

  bool in_class() const;

  bool operator==(const RewardTable&) const = default;
};

/// Member of the Q class: Q_h(s, a) in [0, ceiling]; Q_{H+1} is implicitly 0.
struct QTable {
  Shape shape;
  std::vector<double> values;

  QTable() = default;
  explicit QTable(Shape shp, double fill = 0.0) : shape(shp), values(shp.cells(), fill) {}

  double operator()(int h, int s, int a) const { return values[shape.index(h, s, a)]; }
  double& operator()(int h, int s, int a) { return values[shape.index(h, s, a)]; }

  std::span<const double> step(int h) const {
    return {values.data() + shape.index(h, 0, 0), shape.step_cells()};
  }

  double max_at(int h, int s) const;
  /// Lowest-index maximizer.
  int argmax_at(int h, int s) const;

  /// All entries within [0, horizon].
  bool in_class() const;

  bool operator==(const QTable&) const = default;
};

enum class PolicyKind { deterministic, stochastic };

/// Non-stationary Markov policy pi_h(a | s).
struct Policy {
  Shape shape;
  std::vector<double> probs;
  PolicyKind kind = PolicyKind::stochastic;

  static Policy uniform(Shape shp);
  /// actions[h * S + s] is the chosen action.
  static Policy deterministic(Shape shp, std::span<const int> actions);
  /// Validates rows; renormalizes rows within kRenormalizeTol of 1.
  static Policy stochastic(Shape shp, std::vector<double> probs);

  std::span<const double> row(int h, int s) const {
    return {probs.data() + shape.index(h, s, 0), static_cast<std::size_t>(shape.num_actions)};
  }
  double operator()(int h, int s, int a) const { return probs[shape.index(h, s, a)]; }

  /// Action of a deterministic policy (lowest-index argmax for stochastic ones).
  int action(int h, int s) const;

  bool operator==(const Policy&) const = default;
};

/// Uniform mixture over K component policies; one component is drawn per episode.
struct MixturePolicy {
  std::vector<Policy> components;
};

struct StepSA {
  int state = 0;
  int action = 0;
  bool operator==(const StepSA&) const = default;
};

struct Trajectory {
  std::vector<StepSA> steps;
  std::uint64_t seed = 0;

  bool operator==(const Trajectory&) const = default;
};

enum class DatasetRole { learner_buffer, expert_demos };

struct Dataset {
  std::vector<Trajectory> trajectories;
  DatasetRole role = DatasetRole::learner_buffer;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }

  bool operator==(const Dataset&) const = default;
};

/// Episodic MDP with a single deterministic initial state.
struct TabularMdp {
  Shape shape;
  int initial_state = 0;
  /// P_h(s' | s, a) at index shape.index(h, s, a) * S + s'.
  std::vector<double> transitions;
  RewardTable true_reward;

  int horizon() const { return shape.horizon; }
  int num_states() const { return shape.num_states; }
  int num_actions() const { return shape.num_actions; }

  std::span<const double> next_dist(int h, int s, int a) const {
    return {transitions.data() + shape.index(h, s, a) * shape.num_states,
            static_cast<std::size_t>(shape.num_states)};
  }
  /// Slice of P for step h, laid out [s][a][s'].
  std::span<const double> step_transitions(int h) const {
    return {transitions.data() + shape.index(h, 0, 0) * shape.num_states,
            shape.step_cells() * shape.num_states};
  }

  bool operator==(const TabularMdp&) const = default;
};

struct Violation {
  std::string what;
  int h = -1;
  int s = -1;
  int a = -1;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_mdp(const TabularMdp& mdp);

/// Builds an MDP, renormalizing rows within kRenormalizeTol of 1.
/// Throws std::invalid_argument listing violations otherwise.
TabularMdp make_mdp(Shape shape, int initial_state, std::vector<double> transitions,
                    RewardTable reward);

/// Checks trajectory length and index bounds against a shape.
bool trajectory_fits(const Trajectory& traj, const Shape& shape);

}  // namespace optail
