#include "oracles.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace metacog::oracles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tabulate robustness of f at every sample index (dynamic programming over
// the formula tree, explicit window scans on the index grid).
std::vector<double> tabulate(const stl::Formula& f, const Trajectory& traj) {
  const std::size_t N = traj.size();
  std::vector<double> out(N);
  auto clamp_index = [&](double t) {
    return static_cast<long>(std::llround((t - traj.t0) / traj.dt));
  };
  switch (f.kind) {
    case stl::FormulaKind::True:
      for (auto& v : out) v = kInf;
      return out;
    case stl::FormulaKind::Pred:
      for (std::size_t i = 0; i < N; ++i) out[i] = f.pred(traj.states[i]);
      return out;
    case stl::FormulaKind::Not: {
      auto a = tabulate(*f.left, traj);
      for (std::size_t i = 0; i < N; ++i) out[i] = -a[i];
      return out;
    }
    case stl::FormulaKind::And: {
      auto a = tabulate(*f.left, traj);
      auto b = tabulate(*f.right, traj);
      for (std::size_t i = 0; i < N; ++i)
        out[i] = std::isnan(a[i]) || std::isnan(b[i]) ? std::numeric_limits<double>::quiet_NaN()
                                                      : std::min(a[i], b[i]);
      return out;
    }
    case stl::FormulaKind::Or: {
      auto a = tabulate(*f.left, traj);
      auto b = tabulate(*f.right, traj);
      for (std::size_t i = 0; i < N; ++i)
        out[i] = std::isnan(a[i]) || std::isnan(b[i]) ? std::numeric_limits<double>::quiet_NaN()
                                                      : std::max(a[i], b[i]);
      return out;
    }
    case stl::FormulaKind::Eventually:
    case stl::FormulaKind::Always: {
      auto a = tabulate(*f.left, traj);
      const bool is_max = f.kind == stl::FormulaKind::Eventually;
      for (std::size_t i = 0; i < N; ++i) {
        const double t = traj.time_of(i);
        long lo = clamp_index(t + f.interval.a);
        long hi = clamp_index(t + f.interval.b);
        // index_at_or_after / at_or_before semantics: snap fractional
        // offsets inward and truncate at the horizon
        lo = std::max<long>(0, static_cast<long>(std::ceil((t + f.interval.a - traj.t0) / traj.dt - 1e-9)));
        hi = std::min<long>(static_cast<long>(N) - 1,
                            static_cast<long>(std::floor((t + f.interval.b - traj.t0) / traj.dt + 1e-9)));
        if (lo >= static_cast<long>(N) || lo > hi) {
          out[i] = std::numeric_limits<double>::quiet_NaN();  // empty window
          continue;
        }
        double v = is_max ? -kInf : kInf;
        for (long j = lo; j <= hi; ++j) {
          if (std::isnan(a[j])) {
            v = std::numeric_limits<double>::quiet_NaN();
            break;
          }
          v = is_max ? std::max(v, a[j]) : std::min(v, a[j]);
        }
        out[i] = v;
      }
      return out;
    }
    case stl::FormulaKind::Until: {
      auto a = tabulate(*f.left, traj);
      auto b = tabulate(*f.right, traj);
      for (std::size_t i = 0; i < N; ++i) {
        const double t = traj.time_of(i);
        const long lo = std::max<long>(
            0, static_cast<long>(std::ceil((t + f.interval.a - traj.t0) / traj.dt - 1e-9)));
        const long hi = std::min<long>(static_cast<long>(N) - 1,
                                       static_cast<long>(std::floor((t + f.interval.b - traj.t0) / traj.dt + 1e-9)));
        if (lo >= static_cast<long>(N) || lo > hi) {
          out[i] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        double best = -kInf;
        for (long j = lo; j <= hi; ++j) {
          double v = std::isnan(b[j]) ? kInf : b[j];
          if (std::isnan(b[j])) {
            best = std::numeric_limits<double>::quiet_NaN();
            break;
          }
          for (long k = static_cast<long>(i); k <= j; ++k) {
            if (std::isnan(a[k])) {
              v = std::numeric_limits<double>::quiet_NaN();
              break;
            }
            v = std::min(v, a[k]);
          }
          if (std::isnan(v)) {
            best = v;
            break;
          }
          best = std::max(best, v);
        }
        out[i] = best;
      }
      return out;
    }
  }
  return out;
}

}  // namespace

double brute_force_robustness(const stl::Formula& f, const Trajectory& traj, double t) {
  const auto table = tabulate(f, traj);
  const auto i = static_cast<std::size_t>(std::llround((t - traj.t0) / traj.dt));
  const double v = table[i];
  if (std::isnan(v)) throw EmptyWindowError("oracle: empty window");
  return v;
}

namespace {

stl::FormulaPtr random_formula_node(std::mt19937_64& rng, const std::vector<std::string>& schema,
                                    int depth, double max_window) {
  std::uniform_int_distribution<int> kind_pick(0, depth <= 0 ? 0 : 5);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_int_distribution<int> var_pick(0, static_cast<int>(schema.size()) - 1);
  std::uniform_real_distribution<double> win(0.0, max_window);
  const int kind = kind_pick(rng);
  if (kind == 0) {
    // linear predicate c0 + c1 * x_i  (> 0)
    const int vi = var_pick(rng);
    auto expr = stl::Expr::binary(
        stl::ExprOp::Add, stl::Expr::constant(coeff(rng)),
        stl::Expr::binary(stl::ExprOp::Mul, stl::Expr::constant(coeff(rng)),
                          stl::Expr::var(vi, schema[static_cast<std::size_t>(vi)])));
    return stl::Formula::predicate(stl::Predicate{"p", expr});
  }
  auto sub = [&] { return random_formula_node(rng, schema, depth - 1, max_window); };
  double a = win(rng), b = win(rng);
  if (a > b) std::swap(a, b);
  switch (kind) {
    case 1: return stl::Formula::negation(sub());
    case 2: return stl::Formula::conjunction(sub(), sub());
    case 3: return stl::Formula::disjunction(sub(), sub());
    case 4: return stl::Formula::eventually(a, b, sub());
    default: return stl::Formula::always(a, b, sub());
  }
}

}  // namespace

RandomFormula random_formula(std::mt19937_64& rng, const std::vector<std::string>& schema,
                             int max_depth, double max_window) {
  RandomFormula rf;
  // occasionally wrap the whole thing in an until
  std::uniform_int_distribution<int> top(0, 4);
  if (top(rng) == 0) {
    std::uniform_real_distribution<double> win(0.0, max_window);
    double a = win(rng), b = win(rng);
    if (a > b) std::swap(a, b);
    rf.formula = stl::Formula::until(a, b, random_formula_node(rng, schema, max_depth - 1, max_window),
                                     random_formula_node(rng, schema, max_depth - 1, max_window));
  } else {
    rf.formula = random_formula_node(rng, schema, max_depth, max_window);
  }
  rf.text = stl::to_string(*rf.formula);
  return rf;
}

Trajectory random_signal(std::mt19937_64& rng, int dim, int samples, double dt) {
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  std::uniform_real_distribution<double> freq(0.1, 2.0);
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  std::vector<std::array<double, 3>> waves;
  for (int k = 0; k < dim; ++k) waves.push_back({amp(rng), freq(rng), amp(rng)});
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd x(dim);
    const double t = i * dt;
    for (int k = 0; k < dim; ++k)
      x[k] = waves[static_cast<std::size_t>(k)][0] *
                 std::sin(2 * 3.14159265358979 * waves[static_cast<std::size_t>(k)][1] * t) +
             waves[static_cast<std::size_t>(k)][2];
    traj.states.push_back(x);
  }
  return traj;
}

void dense_gp_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& kq, double kqq,
                        const Eigen::VectorXd& y, double noise, double prior_mean, double* mean,
                        double* variance) {
  const Eigen::MatrixXd Kn = K + noise * Eigen::MatrixXd::Identity(K.rows(), K.cols());
  const Eigen::LLT<Eigen::MatrixXd> llt(Kn);
  const Eigen::VectorXd alpha = llt.solve(y - Eigen::VectorXd::Constant(y.size(), prior_mean));
  *mean = prior_mean + kq.dot(alpha);
  *variance = kqq - kq.dot(llt.solve(kq));
}

double gaussian_kl(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& S1,
                   const Eigen::VectorXd& mu2, const Eigen::MatrixXd& S2) {
  const Eigen::Index d = mu1.size();
  const Eigen::LLT<Eigen::MatrixXd> llt2(S2);
  const Eigen::MatrixXd S2inv_S1 = llt2.solve(S1);
  const Eigen::VectorXd dm = mu2 - mu1;
  const double quad = dm.dot(llt2.solve(dm));
  const double logdet1 = 2.0 * Eigen::MatrixXd(Eigen::LLT<Eigen::MatrixXd>(S1).matrixL())
                                   .diagonal()
                                   .array()
                                   .log()
                                   .sum();
  const double logdet2 =
      2.0 * Eigen::MatrixXd(llt2.matrixL()).diagonal().array().log().sum();
  return 0.5 * (S2inv_S1.trace() + quad - static_cast<double>(d) + logdet2 - logdet1);
}

}  // namespace metacog::oracles
