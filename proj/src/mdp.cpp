#include "optail/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace optail {

bool RewardTable::in_class() const {
  if (values.size() != shape.cells()) return false;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

double QTable::max_at(int h, int s) const {
  const auto base = shape.index(h, s, 0);
  double best = values[base];
  for (int a = 1; a < shape.num_actions; ++a) best = std::max(best, values[base + a]);
  return best;
}

int QTable::argmax_at(int h, int s) const {
  const auto base = shape.index(h, s, 0);
  int best = 0;
  for (int a = 1; a < shape.num_actions; ++a) {
    if (values[base + a] > values[base + best]) best = a;
  }
  return best;
}

bool QTable::in_class() const {
  if (values.size() != shape.cells()) return false;
  const double ceiling = shape.horizon;
  for (double v : values) {
    if (!(v >= 0.0 && v <= ceiling)) return false;
  }
  return true;
}

Policy Policy::uniform(Shape shp) {
  Policy p;
  p.shape = shp;
  p.kind = PolicyKind::stochastic;
  p.probs.assign(shp.cells(), 1.0 / shp.num_actions);
  return p;
}

Policy Policy::deterministic(Shape shp, std::span<const int> actions) {
  if (actions.size() != static_cast<std::size_t>(shp.horizon) * shp.num_states) {
    throw std::invalid_argument("deterministic policy: expected H*S actions");
  }
  Policy p;
  p.shape = shp;
  p.kind = PolicyKind::deterministic;
  p.probs.assign(shp.cells(), 0.0);
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      const int a = actions[static_cast<std::size_t>(h) * shp.num_states + s];
      if (a < 0 || a >= shp.num_actions) {
        throw std::invalid_argument("deterministic policy: action out of range");
      }
      p.probs[shp.index(h, s, a)] = 1.0;
    }
  }
  return p;
}

Policy Policy::stochastic(Shape shp, std::vector<double> probs) {
  if (probs.size() != shp.cells()) {
    throw std::invalid_argument("stochastic policy: size mismatch");
  }
  for (int h = 0; h < shp.horizon; ++h) {
    for (int s = 0; s < shp.num_states; ++s) {
      double sum = 0.0;
      for (int a = 0; a < shp.num_actions; ++a) {
        const double p = probs[shp.index(h, s, a)];
        if (!(p >= 0.0)) throw std::invalid_argument("stochastic policy: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRenormalizeTol) {
        std::ostringstream os;
        os << "stochastic policy: row (h=" << h << ", s=" << s << ") sums to " << sum;
        throw std::invalid_argument(os.str());
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        for (int a = 0; a < shp.num_actions; ++a) probs[shp.index(h, s, a)] /= sum;
      }
    }
  }
  Policy p;
  p.shape = shp;
  p.kind = PolicyKind::stochastic;
  p.probs = std::move(probs);
  return p;
}

int Policy::action(int h, int s) const {
  const auto r = row(h, s);
  int best = 0;
  for (int a = 1; a < shape.num_actions; ++a) {
    if (r[a] > r[best]) best = a;
  }
  return best;
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (const auto& v : violations) {
    os << "\n  " << v.what;
    if (v.h >= 0) os << " at (h=" << v.h << ", s=" << v.s << ", a=" << v.a << ")";
  }
  return os.str();
}

ValidationReport validate_mdp(const TabularMdp& mdp) {
  ValidationReport report;
  const Shape& shp = mdp.shape;
  if (!shp.valid()) {
    report.violations.push_back({"non-positive dimension"});
    return report;
  }
  if (mdp.initial_state < 0 || mdp.initial_state >= shp.num_states) {
    report.violations.push_back({"initial_state out of range"});
  }
  if (mdp.transitions.size() != shp.cells() * shp.num_states) {
    report.violations.push_back({"transition table size mismatch"});
  } else {
    for (int h = 0; h < shp.horizon; ++h) {
      for (int s = 0; s < shp.num_states; ++s) {
        for (int a = 0; a < shp.num_actions; ++a) {
          double sum = 0.0;
          bool negative = false;
          for (double p : mdp.next_dist(h, s, a)) {
            if (!(p >= 0.0)) negative = true;
            sum += p;
          }
          if (negative) report.violations.push_back({"negative transition probability", h, s, a});
          if (!(std::abs(sum - 1.0) <= kStochasticTol)) {
            std::ostringstream os;
            os << "transition row sums to " << sum;
            report.violations.push_back({os.str(), h, s, a});
          }
        }
      }
    }
  }
  if (mdp.true_reward.shape != shp || mdp.true_reward.values.size() != shp.cells()) {
    report.violations.push_back({"reward shape mismatch"});
  } else {
    for (int h = 0; h < shp.horizon; ++h) {
      for (int s = 0; s < shp.num_states; ++s) {
        for (int a = 0; a < shp.num_actions; ++a) {
          const double r = mdp.true_reward(h, s, a);
          if (!(r >= 0.0 && r <= 1.0)) {
            std::ostringstream os;
            os << "reward " << r << " outside [0, 1]";
            report.violations.push_back({os.str(), h, s, a});
          }
        }
      }
    }
  }
  return report;
}

TabularMdp make_mdp(Shape shape, int initial_state, std::vector<double> transitions,
                    RewardTable reward) {
  TabularMdp mdp{shape, initial_state, std::move(transitions), std::move(reward)};
  if (shape.valid() && mdp.transitions.size() == shape.cells() * shape.num_states) {
    const auto S = static_cast<std::size_t>(shape.num_states);
    for (std::size_t row = 0; row < shape.cells(); ++row) {
      double sum = 0.0;
      for (std::size_t j = 0; j < S; ++j) sum += mdp.transitions[row * S + j];
      if (std::abs(sum - 1.0) > kStochasticTol && std::abs(sum - 1.0) <= kRenormalizeTol) {
        for (std::size_t j = 0; j < S; ++j) mdp.transitions[row * S + j] /= sum;
      }
    }
  }
  const auto report = validate_mdp(mdp);
  if (!report.ok()) throw std::invalid_argument("invalid MDP: " + report.summary());
  return mdp;
}

bool trajectory_fits(const Trajectory& traj, const Shape& shape) {
  if (traj.steps.size() != static_cast<std::size_t>(shape.horizon)) return false;
  for (const auto& st : traj.steps) {
    if (st.state < 0 || st.state >= shape.num_states) return false;
    if (st.action < 0 || st.action >= shape.num_actions) return false;
  }
  return true;
}

}  // namespace optail
