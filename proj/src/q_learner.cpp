#include "optail/q_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "optail/rng.hpp"

namespace optail {

DatasetStats::DatasetStats(Shape shape)
    : shape_(shape),
      counts_(shape.cells(), 0),
      state_visits_(static_cast<std::size_t>(shape.horizon) * shape.num_states, 0),
      successors_(shape.cells()) {}

DatasetStats::DatasetStats(const Dataset& dataset, Shape shape) : DatasetStats(shape) {
  for (const auto& t : dataset.trajectories) add(t);
}

void DatasetStats::add(const Trajectory& traj) {
  if (!trajectory_fits(traj, shape_)) {
    throw std::invalid_argument("DatasetStats: trajectory does not fit the shape");
  }
  const int H = shape_.horizon;
  for (int h = 0; h < H; ++h) {
    const auto& st = traj.steps[h];
    const auto cell = shape_.index(h, st.state, st.action);
    if (counts_[cell]++ == 0) {
      visited_.insert(std::lower_bound(visited_.begin(), visited_.end(), cell), cell);
    }
    ++state_visits_[static_cast<std::size_t>(h) * shape_.num_states + st.state];
    if (h + 1 < H) {
      const int next = traj.steps[h + 1].state;
      auto& succ = successors_[cell];
      auto it = std::find_if(succ.begin(), succ.end(),
                             [next](const Successor& x) { return x.state == next; });
      if (it == succ.end()) {
        succ.push_back({next, 1});
      } else {
        ++it->count;
      }
    }
  }
  ++num_trajectories_;
}

namespace {

double max_of(std::span<const double> q_next, int s, int A) {
  const double* row = q_next.data() + static_cast<std::size_t>(s) * A;
  return *std::max_element(row, row + A);
}

double target_of(const Trajectory& t, std::span<const double> q_next, const RewardTable& reward,
                 int h, int A) {
  const auto& st = t.steps[h];
  double target = reward(h, st.state, st.action);
  if (!q_next.empty()) target += max_of(q_next, t.steps[h + 1].state, A);
  return target;
}

void check_step_args(std::span<const double> q_next, const RewardTable& reward, int h) {
  const Shape& shp = reward.shape;
  if (h < 0 || h >= shp.horizon) throw std::invalid_argument("step index out of range");
  if (h + 1 == shp.horizon && !q_next.empty()) {
    throw std::invalid_argument("q_next must be empty (Q_{H+1} = 0) at the last step");
  }
  if (h + 1 < shp.horizon && q_next.size() != shp.step_cells()) {
    throw std::invalid_argument("q_next has wrong size");
  }
}

// State values and lowest-index maximizers for every (h, s).
struct GreedyView {
  std::vector<double> value;
  std::vector<int> arg;
};

GreedyView greedy_view(const QTable& q) {
  const Shape& shp = q.shape;
  GreedyView g;
  const auto n = static_cast<std::size_t>(shp.horizon) * shp.num_states;
  g.value.resize(n);
  g.arg.resize(n);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      const auto i = static_cast<std::size_t>(h) * shp.num_states + s;
      g.arg[i] = q.argmax_at(h, s);
      g.value[i] = q(h, s, g.arg[i]);
    }
  }
  return g;
}

QTable initial_point(QInitializer init, const DatasetStats& stats, const RewardTable& reward,
                     bool tight) {
  const Shape& shp = stats.shape();
  switch (init) {
    case QInitializer::optimistic_ceiling: {
      QTable q(shp);
      for (int h = 0; h < shp.horizon; ++h) {
        std::fill_n(q.values.begin() + shp.index(h, 0, 0), shp.step_cells(), q_ceiling(shp, h, tight));
      }
      return q;
    }
    case QInitializer::empirical_backup:
      return empirical_backup(stats, reward, std::numeric_limits<double>::infinity(), tight);
    case QInitializer::zero:
      return QTable(shp, 0.0);
  }
  return QTable(shp);
}

QTable random_point(const Shape& shp, SplitMix64& rng, bool tight) {
  QTable q(shp);
  for (int h = 0; h < shp.horizon; ++h) {
    const double ceil = q_ceiling(shp, h, tight);
    for (std::size_t c = 0; c < shp.step_cells(); ++c) {
      q.values[shp.index(h, 0, 0) + c] = ceil * rng.uniform();
    }
  }
  return q;
}

struct RestartOutcome {
  QTable q;
  ObjectiveEvaluation eval;
  int iterations = 0;
};

// Projected subgradient descent with a diagonal preconditioner 2 (n_c + m_c) + 2,
// where m_c counts arrivals into the cell's state (the curvature contributed by
// predecessor residuals). Keeps the best iterate seen.
RestartOutcome descend(QTable q, const DatasetStats& stats, const RewardTable& reward,
                       int initial_state, const QSolveConfig& cfg) {
  const Shape& shp = stats.shape();
  std::vector<double> ceiling(shp.cells());
  std::vector<double> precond(shp.cells());
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      const double arrivals = h > 0 ? stats.state_visits(h, s) : 0.0;
      for (int a = 0; a < shp.num_actions; ++a) {
        const auto c = shp.index(h, s, a);
        ceiling[c] = q_ceiling(shp, h, cfg.tight_clip);
        precond[c] = 2.0 * (stats.count(c) + arrivals) + 2.0;
      }
    }
  }
  for (std::size_t c = 0; c < q.values.size(); ++c) q.values[c] = std::clamp(q.values[c], 0.0, ceiling[c]);

  auto eval = evaluate_objective(q, stats, reward, initial_state, cfg.lambda, cfg.tight_clip);
  RestartOutcome best{q, eval, 0};
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const double step = cfg.step_size / std::sqrt(1.0 + it / 25.0);
    double moved = 0.0;
    for (std::size_t c = 0; c < q.values.size(); ++c) {
      const double g = eval.subgradient[c];
      if (g == 0.0) continue;
      const double next = std::clamp(q.values[c] - step * g / precond[c], 0.0, ceiling[c]);
      moved = std::max(moved, std::abs(next - q.values[c]));
      q.values[c] = next;
    }
    if (moved <= cfg.tolerance) break;
    eval = evaluate_objective(q, stats, reward, initial_state, cfg.lambda, cfg.tight_clip);
    if (!std::isfinite(eval.objective)) throw std::runtime_error("solve: non-finite objective");
    if (eval.objective < best.eval.objective) {
      best.q = q;
      best.eval = eval;
    }
  }
  best.iterations = it;
  return best;
}

// Backward sweeps toward the target-smoothed fixed point. Targets use a
// Polyak-averaged copy evaluated at its own greedy action; the optimism bonus
// lambda / (2 n) lands on the greedy action at (1, s_1).
RestartOutcome practical_sweeps(QTable q, const DatasetStats& stats, const RewardTable& reward,
                                int initial_state, const QSolveConfig& cfg) {
  const Shape& shp = stats.shape();
  const int S = shp.num_states;
  const int A = shp.num_actions;
  const int H = shp.horizon;
  QTable target = q;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const auto view = greedy_view(target);
    const int start_action = q.argmax_at(0, initial_state);
    QTable next = q;
    for (const auto c : stats.visited()) {
      const int h = static_cast<int>(c / shp.step_cells());
      const int s = static_cast<int>((c / A) % S);
      const int a = static_cast<int>(c % A);
      const double n = stats.count(c);
      double t = reward.values[c];
      if (h + 1 < H) {
        double acc = 0.0;
        for (const auto& succ : stats.successors(c)) {
          acc += succ.count * view.value[static_cast<std::size_t>(h + 1) * S + succ.state];
        }
        t += acc / n;
      }
      if (h == 0 && s == initial_state && a == start_action) t += cfg.lambda / (2.0 * n);
      next.values[c] = std::clamp(t, 0.0, q_ceiling(shp, h, cfg.tight_clip));
    }
    if (cfg.lambda > 0.0 && stats.count(0, initial_state, start_action) == 0) {
      next(0, initial_state, start_action) = q_ceiling(shp, 0, cfg.tight_clip);
    }
    double moved = 0.0;
    for (std::size_t c = 0; c < q.values.size(); ++c) {
      moved = std::max(moved, std::abs(next.values[c] - q.values[c]));
      const double smoothed = cfg.polyak_rate * next.values[c] + (1.0 - cfg.polyak_rate) * target.values[c];
      moved = std::max(moved, std::abs(smoothed - target.values[c]));
      target.values[c] = smoothed;
    }
    q = std::move(next);
    if (moved <= cfg.tolerance) {
      ++it;
      break;
    }
  }
  auto eval = evaluate_objective(q, stats, reward, initial_state, cfg.lambda, cfg.tight_clip, false);
  if (!std::isfinite(eval.objective)) throw std::runtime_error("solve: non-finite objective");
  return {std::move(q), std::move(eval), it};
}

}  // namespace

double residual_sum(std::span<const double> q_h, std::span<const double> q_next,
                    const Dataset& dataset, const RewardTable& reward, int h) {
  check_step_args(q_next, reward, h);
  const Shape& shp = reward.shape;
  if (q_h.size() != shp.step_cells()) throw std::invalid_argument("residual_sum: q_h has wrong size");
  double total = 0.0;
  for (const auto& t : dataset.trajectories) {
    const auto& st = t.steps[h];
    const double diff = q_h[static_cast<std::size_t>(st.state) * shp.num_actions + st.action] -
                        target_of(t, q_next, reward, h, shp.num_actions);
    total += diff * diff;
  }
  return total;
}

InnerInfResult inner_inf(std::span<const double> q_next, const Dataset& dataset,
                         const RewardTable& reward, int h, double ceiling) {
  check_step_args(q_next, reward, h);
  const Shape& shp = reward.shape;
  std::vector<double> sum(shp.step_cells(), 0.0);
  std::vector<int> n(shp.step_cells(), 0);
  for (const auto& t : dataset.trajectories) {
    const auto& st = t.steps[h];
    const auto c = static_cast<std::size_t>(st.state) * shp.num_actions + st.action;
    sum[c] += target_of(t, q_next, reward, h, shp.num_actions);
    ++n[c];
  }
  InnerInfResult res;
  res.q_prime_h.assign(shp.step_cells(), 0.0);
  for (std::size_t c = 0; c < sum.size(); ++c) {
    if (n[c] > 0) res.q_prime_h[c] = std::clamp(sum[c] / n[c], 0.0, ceiling);
  }
  res.value = residual_sum(res.q_prime_h, q_next, dataset, reward, h);
  return res;
}

double be(const QTable& q, const Dataset& dataset, const RewardTable& reward, bool tight_clip) {
  const Shape& shp = q.shape;
  if (reward.shape != shp) throw std::invalid_argument("be: shape mismatch");
  double total = 0.0;
  for (int h = 0; h < shp.horizon; ++h) {
    std::span<const double> q_next;
    if (h + 1 < shp.horizon) q_next = q.step(h + 1);
    total += residual_sum(q.step(h), q_next, dataset, reward, h) -
             inner_inf(q_next, dataset, reward, h, q_ceiling(shp, h, tight_clip)).value;
  }
  return total;
}

double be(const QTable& q, const DatasetStats& stats, const RewardTable& reward, bool tight_clip) {
  return evaluate_objective(q, stats, reward, 0, 0.0, tight_clip, false).be;
}

ObjectiveEvaluation evaluate_objective(const QTable& q, const DatasetStats& stats,
                                       const RewardTable& reward, int initial_state,
                                       double lambda, bool tight_clip, bool with_subgradient) {
  const Shape& shp = stats.shape();
  if (q.shape != shp || reward.shape != shp) {
    throw std::invalid_argument("evaluate_objective: shape mismatch");
  }
  const int S = shp.num_states;
  const int H = shp.horizon;
  const auto view = greedy_view(q);
  ObjectiveEvaluation out;
  if (with_subgradient) out.subgradient.assign(shp.cells(), 0.0);
  for (const auto c : stats.visited()) {
    const int h = static_cast<int>(c / shp.step_cells());
    const double n = stats.count(c);
    double tbar = reward.values[c];
    if (h + 1 < H) {
      double acc = 0.0;
      for (const auto& succ : stats.successors(c)) {
        acc += succ.count * view.value[static_cast<std::size_t>(h + 1) * S + succ.state];
      }
      tbar += acc / n;
    }
    const double d = q.values[c] - tbar;
    const double slack = std::clamp(tbar, 0.0, q_ceiling(shp, h, tight_clip)) - tbar;
    out.be += n * (d * d - slack * slack);
    if (!with_subgradient) continue;
    out.subgradient[c] += 2.0 * n * d;
    if (h + 1 < H) {
      // d/dtbar of n [(Q - tbar)^2 - (clip(tbar) - tbar)^2] = 2 n (slack - d)
      const double coef = 2.0 * (slack - d);
      for (const auto& succ : stats.successors(c)) {
        const auto i = static_cast<std::size_t>(h + 1) * S + succ.state;
        out.subgradient[shp.index(h + 1, succ.state, view.arg[i])] += coef * succ.count;
      }
    }
  }
  const auto start = static_cast<std::size_t>(initial_state);
  out.optimism = view.value[start];
  out.objective = out.be - lambda * out.optimism;
  if (with_subgradient) out.subgradient[shp.index(0, initial_state, view.arg[start])] -= lambda;
  return out;
}

QTable empirical_backup(const DatasetStats& stats, const RewardTable& reward,
                        double unvisited_value, bool tight_clip) {
  const Shape& shp = stats.shape();
  QTable q(shp);
  for (int h = shp.horizon - 1; h >= 0; --h) {
    const double ceil = q_ceiling(shp, h, tight_clip);
    for (int s = 0; s < shp.num_states; ++s) {
      for (int a = 0; a < shp.num_actions; ++a) {
        const auto c = shp.index(h, s, a);
        const int n = stats.count(c);
        if (n == 0) {
          q.values[c] = std::clamp(unvisited_value, 0.0, ceil);
          continue;
        }
        double t = reward.values[c];
        if (h + 1 < shp.horizon) {
          double acc = 0.0;
          for (const auto& succ : stats.successors(c)) acc += succ.count * q.max_at(h + 1, succ.state);
          t += acc / n;
        }
        q.values[c] = std::clamp(t, 0.0, ceil);
      }
    }
  }
  return q;
}

void validate_q_config(const QSolveConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("q solver: lambda must be >= 0");
  if (!(cfg.polyak_rate > 0.0 && cfg.polyak_rate <= 1.0)) {
    throw std::invalid_argument("q solver: polyak_rate must be in (0, 1]");
  }
  if (cfg.max_iterations < 0) throw std::invalid_argument("q solver: max_iterations must be >= 0");
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("q solver: step_size must be positive");
  if (cfg.random_restarts < 0) throw std::invalid_argument("q solver: random_restarts must be >= 0");
  if (cfg.initializers.empty() && cfg.random_restarts == 0) {
    throw std::invalid_argument("q solver: no initializers");
  }
}

QSolveResult solve(const DatasetStats& stats, const RewardTable& reward, int initial_state,
                   const QSolveConfig& cfg) {
  validate_q_config(cfg);
  const Shape& shp = stats.shape();
  if (reward.shape != shp) throw std::invalid_argument("solve: reward shape mismatch");
  if (initial_state < 0 || initial_state >= shp.num_states) {
    throw std::invalid_argument("solve: initial_state out of range");
  }

  std::vector<QTable> starts;
  for (const auto init : cfg.initializers) starts.push_back(initial_point(init, stats, reward, cfg.tight_clip));
  SplitMix64 rng(derive_seed(cfg.seed, SeedStream::solver, 0));
  for (int i = 0; i < cfg.random_restarts; ++i) starts.push_back(random_point(shp, rng, cfg.tight_clip));

  QSolveResult result;
  std::optional<RestartOutcome> best;
  int total_iterations = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    auto outcome = cfg.mode == QSolveMode::theoretical
                       ? descend(std::move(starts[i]), stats, reward, initial_state, cfg)
                       : practical_sweeps(std::move(starts[i]), stats, reward, initial_state, cfg);
    total_iterations += outcome.iterations;
    result.restart_objectives.push_back(outcome.eval.objective);
    if (!best || outcome.eval.objective < best->eval.objective) {
      best = std::move(outcome);
      result.restart = static_cast<int>(i);
    }
  }
  result.q = std::move(best->q);
  result.objective = best->eval.objective;
  result.be = best->eval.be;
  result.optimism = best->eval.optimism;
  result.opt_error_proxy = 0.0;
  result.iterations = total_iterations;
  return result;
}

QSolveResult solve(const Dataset& dataset, const RewardTable& reward, int initial_state,
                   const QSolveConfig& cfg) {
  return solve(DatasetStats(dataset, reward.shape), reward, initial_state, cfg);
}

Policy greedy_policy(const QTable& q) {
  const Shape& shp = q.shape;
  std::vector<int> actions(static_cast<std::size_t>(shp.horizon) * shp.num_states);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      actions[static_cast<std::size_t>(h) * shp.num_states + s] = q.argmax_at(h, s);
    }
  }
  return Policy::deterministic(shp, actions);
}

}  // namespace optail
