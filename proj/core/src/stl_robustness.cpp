#include "metacog/stl/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace metacog::stl {

namespace {

// Grid indices whose timestamps fall in [lo, hi], truncated to the
// sampled horizon.
struct Window {
  std::size_t first;
  std::size_t last;  // inclusive
};

Window window_of(const Trajectory& traj, double lo, double hi) {
  if (lo > traj.end_time() + 1e-12 || hi < traj.t0 - 1e-12)
    throw EmptyWindowError("evaluation window [" + std::to_string(lo) + "," + std::to_string(hi) +
                           "] lies outside the sampled horizon");
  std::size_t first = traj.index_at_or_after(lo);
  std::size_t last = traj.index_at_or_before(hi);
  if (first >= traj.size() || first > last)
    throw EmptyWindowError("evaluation window [" + std::to_string(lo) + "," + std::to_string(hi) +
                           "] contains no samples");
  return {first, last};
}

double eval_robustness(const Formula& f, const Trajectory& traj, double t) {
  switch (f.kind) {
    case FormulaKind::True:
      return std::numeric_limits<double>::infinity();
    case FormulaKind::Pred: {
      Window w = window_of(traj, t, t);
      return f.pred(traj.states[w.first]);
    }
    case FormulaKind::Not:
      return -eval_robustness(*f.left, traj, t);
    case FormulaKind::And:
      return std::min(eval_robustness(*f.left, traj, t), eval_robustness(*f.right, traj, t));
    case FormulaKind::Or:
      return std::max(eval_robustness(*f.left, traj, t), eval_robustness(*f.right, traj, t));
    case FormulaKind::Eventually: {
      Window w = window_of(traj, t + f.interval.a, t + f.interval.b);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = w.first; i <= w.last; ++i)
        best = std::max(best, eval_robustness(*f.left, traj, traj.time_of(i)));
      return best;
    }
    case FormulaKind::Always: {
      Window w = window_of(traj, t + f.interval.a, t + f.interval.b);
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t i = w.first; i <= w.last; ++i)
        worst = std::min(worst, eval_robustness(*f.left, traj, traj.time_of(i)));
      return worst;
    }
    case FormulaKind::Until: {
      Window w = window_of(traj, t + f.interval.a, t + f.interval.b);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = w.first; i <= w.last; ++i) {
        const double t1 = traj.time_of(i);
        double v = eval_robustness(*f.right, traj, t1);
        Window pre = window_of(traj, t, t1);
        for (std::size_t j = pre.first; j <= pre.last; ++j)
          v = std::min(v, eval_robustness(*f.left, traj, traj.time_of(j)));
        best = std::max(best, v);
      }
      return best;
    }
  }
  throw Error("unreachable formula kind");
}

}  // namespace

double robustness(const Formula& f, const Trajectory& traj, double t) {
  traj.validate();
  return eval_robustness(f, traj, t);
}

bool satisfies(const Formula& f, const Trajectory& traj, double t) {
  return robustness(f, traj, t) > 0.0;
}

namespace {

Eigen::VectorXd robustness_vector_for(const PredicateStack& stack, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& r) {
  stack.validate();
  if (!x.allFinite()) throw NumericError("robustness_vector: non-finite state");
  if (x.size() != r.size())
    throw DimensionError("robustness_vector: state dimension " + std::to_string(x.size()) +
                         " does not match setpoint dimension " + std::to_string(r.size()));
  // Predicates see the state with the active reference appended, so they can
  // reference both x1..xn and R1..Rn.
  Eigen::VectorXd xr(2 * x.size());
  xr << x, r;
  Eigen::VectorXd rho(static_cast<Eigen::Index>(stack.safety.size()) + 1);
  for (std::size_t i = 0; i < stack.safety.size(); ++i)
    rho[static_cast<Eigen::Index>(i)] = stack.safety[i](xr);
  rho[rho.size() - 1] = stack.eps - (x - r).norm();
  return rho;
}

}  // namespace

Eigen::VectorXd robustness_vector(const PredicateStack& stack, const Eigen::VectorXd& x) {
  return robustness_vector_for(stack, x, stack.setpoint);
}

Eigen::VectorXd robustness_vector(const PredicateStack& stack, const Eigen::VectorXd& x, double t) {
  return robustness_vector_for(stack, x, stack.setpoint_at(t));
}

double smooth_conjunction(const Eigen::VectorXd& rhos) {
  if (rhos.size() == 0) throw DimensionError("smooth_conjunction: empty input");
  if (!rhos.allFinite()) throw NumericError("smooth_conjunction: non-finite input");
  // -log sum exp(-rho_i), shifted by the minimum to avoid overflow.
  const double m = rhos.minCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < rhos.size(); ++i) s += std::exp(-(rhos[i] - m));
  return m - std::log(s);
}

}  // namespace metacog::stl
