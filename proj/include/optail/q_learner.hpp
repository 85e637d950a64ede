#pragma once

// Optimism-regularized Bellman-error minimization over tabular Q-functions.
//
//   E_h(Q_h, Q_{h+1}) = sum_i (Q_h(s_h^i, a_h^i) - r_h(s_h^i, a_h^i)
//                              - max_a' Q_{h+1}(s_{h+1}^i, a'))^2
//   BE(Q)             = sum_h [E_h(Q_h, Q_{h+1}) - inf_{Q'_h} E_h(Q'_h, Q_{h+1})]
//   L(Q)              = BE(Q) - lambda * max_a Q_1(s_1, a)
//
// For a tabular class the inner infimum separates per cell. With n visits to
// a cell and mean target tbar, E_h restricted to the cell is
// n (Q - tbar)^2 + (sample variance term), and the constrained minimizer is
// clip(tbar, 0, ceiling). Hence the closed form used by the solver:
//
//   BE(Q) = sum_{visited (h,s,a)} n * [(Q_h(s,a) - tbar)^2 - (clip(tbar) - tbar)^2].

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "optail/mdp.hpp"

namespace optail {

/// Sufficient statistics of a dataset: visit counts and successor counts.
class DatasetStats {
 public:
  struct Successor {
    int state;
    int count;
  };

  DatasetStats() = default;
  explicit DatasetStats(Shape shape);
  DatasetStats(const Dataset& dataset, Shape shape);

  void add(const Trajectory& traj);

  const Shape& shape() const { return shape_; }
  std::size_t num_trajectories() const { return num_trajectories_; }
  int count(std::size_t cell) const { return counts_[cell]; }
  int count(int h, int s, int a) const { return counts_[shape_.index(h, s, a)]; }
  /// Visits to state s at step h.
  int state_visits(int h, int s) const {
    return state_visits_[static_cast<std::size_t>(h) * shape_.num_states + s];
  }
  /// Successors observed from (h, s, a), h < H-1.
  const std::vector<Successor>& successors(std::size_t cell) const { return successors_[cell]; }
  /// Cells with at least one visit, in index order.
  const std::vector<std::size_t>& visited() const { return visited_; }

 private:
  Shape shape_;
  std::size_t num_trajectories_ = 0;
  std::vector<int> counts_;
  std::vector<int> state_visits_;
  std::vector<std::vector<Successor>> successors_;
  std::vector<std::size_t> visited_;
};

/// Upper end of the Q class at step h: horizon, or horizon - h when tight.
inline double q_ceiling(const Shape& shape, int h, bool tight) {
  return tight ? static_cast<double>(shape.horizon - h) : static_cast<double>(shape.horizon);
}

/// E_h evaluated directly over the dataset's trajectories. An empty q_next
/// stands for Q_{H+1} = 0 and is required at h = H-1.
double residual_sum(std::span<const double> q_h, std::span<const double> q_next,
                    const Dataset& dataset, const RewardTable& reward, int h);

struct InnerInfResult {
  std::vector<double> q_prime_h;  ///< S*A table; unvisited cells are 0
  double value = 0.0;
};

/// Constrained minimizer of E_h(., q_next) over [0, ceiling]^{S*A}.
InnerInfResult inner_inf(std::span<const double> q_next, const Dataset& dataset,
                         const RewardTable& reward, int h, double ceiling);

/// BE(Q) from its definition (residual sums minus inner infima).
double be(const QTable& q, const Dataset& dataset, const RewardTable& reward,
          bool tight_clip = false);
/// BE(Q) through the closed form on sufficient statistics.
double be(const QTable& q, const DatasetStats& stats, const RewardTable& reward,
          bool tight_clip = false);

struct ObjectiveEvaluation {
  double objective = 0.0;
  double be = 0.0;
  double optimism = 0.0;  ///< max_a Q_1(s_1, a)
  std::vector<double> subgradient;
};

/// L(Q) and a subgradient. At max ties the lowest-index maximizer receives
/// the partial derivative.
ObjectiveEvaluation evaluate_objective(const QTable& q, const DatasetStats& stats,
                                       const RewardTable& reward, int initial_state,
                                       double lambda, bool tight_clip = false,
                                       bool with_subgradient = true);

/// Backward sweep Q_h = clip(r_h + Phat_h max Q_{h+1}) on visited cells;
/// unvisited cells take `unvisited_value` (clipped to the class).
QTable empirical_backup(const DatasetStats& stats, const RewardTable& reward,
                        double unvisited_value, bool tight_clip = false);

enum class QSolveMode { theoretical, practical };
enum class QInitializer { optimistic_ceiling, empirical_backup, zero };

struct QSolveConfig {
  double lambda = 1.0;
  int max_iterations = 300;
  double step_size = 0.5;
  std::vector<QInitializer> initializers = {QInitializer::optimistic_ceiling,
                                            QInitializer::empirical_backup, QInitializer::zero};
  /// Additional restarts from uniform random points of the class.
  int random_restarts = 0;
  std::uint64_t seed = 0;
  QSolveMode mode = QSolveMode::theoretical;
  /// Polyak rate of the target copy in practical mode, in (0, 1].
  double polyak_rate = 1.0;
  bool tight_clip = false;
  /// Stop once no coordinate moves by more than this.
  double tolerance = 1e-12;

  bool operator==(const QSolveConfig&) const = default;
};

/// Throws std::invalid_argument on lambda < 0 or polyak_rate outside (0, 1].
void validate_q_config(const QSolveConfig& cfg);

struct QSolveResult {
  QTable q;
  double objective = 0.0;
  double be = 0.0;
  double optimism = 0.0;
  /// Own objective minus best objective across restarts (0 for the returned best).
  double opt_error_proxy = 0.0;
  int iterations = 0;
  int restart = 0;
  std::vector<double> restart_objectives;
};

QSolveResult solve(const DatasetStats& stats, const RewardTable& reward, int initial_state,
                   const QSolveConfig& cfg);
QSolveResult solve(const Dataset& dataset, const RewardTable& reward, int initial_state,
                   const QSolveConfig& cfg);

/// Deterministic greedy policy, lowest-index tie-break.
Policy greedy_policy(const QTable& q);

}  // namespace optail
