#include "metacog/rl/policy_iteration.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "metacog/sim/simulate.hpp"

namespace metacog::rl {

Eigen::Index DataLog::state_dim() const {
  return intervals.empty() || intervals.front().x.empty() ? 0 : intervals.front().x.front().size();
}

Eigen::Index DataLog::input_dim() const {
  return intervals.empty() || intervals.front().u.empty() ? 0 : intervals.front().u.front().size();
}

void DataLog::validate() const {
  if (intervals.empty()) throw DimensionError("DataLog: no intervals recorded");
  if (dt <= 0.0 || T_int <= 0.0) throw ConfigError("DataLog: dt and T_int must be positive");
  if (gamma < 0.0) throw ConfigError("DataLog: gamma must be nonnegative");
  const auto samples = static_cast<std::size_t>(std::llround(T_int / dt)) + 1;
  const Eigen::Index n = state_dim();
  const Eigen::Index m = input_dim();
  for (const auto& iv : intervals) {
    if (iv.x.size() != samples || iv.u.size() != samples)
      throw DimensionError("DataLog: interval sample count does not match T_int/dt + 1");
    for (const auto& x : iv.x)
      if (x.size() != n) throw DimensionError("DataLog: state dimension not uniform");
    for (const auto& u : iv.u)
      if (u.size() != m) throw DimensionError("DataLog: input dimension not uniform");
  }
}

Eigen::Index quadratic_basis_size(Eigen::Index d) { return d * (d + 1) / 2; }

Eigen::VectorXd quadratic_basis(const Eigen::VectorXd& X) {
  const Eigen::Index d = X.size();
  Eigen::VectorXd phi(quadratic_basis_size(d));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) phi[k++] = X[i] * X[j];
  return phi;
}

Eigen::MatrixXd value_matrix(const Eigen::VectorXd& w_v, Eigen::Index d) {
  if (w_v.size() != quadratic_basis_size(d))
    throw DimensionError("value_matrix: weight length does not match basis size");
  Eigen::MatrixXd P(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) {
      P(i, j) = i == j ? w_v[k] : 0.5 * w_v[k];
      P(j, i) = P(i, j);
      ++k;
    }
  return P;
}

std::function<Eigen::VectorXd(double)> make_exploration_noise(std::uint64_t seed, Eigen::Index m,
                                                              Eigen::Index n_states,
                                                              double amplitude) {
  if (m < 1 || n_states < 1) throw ConfigError("make_exploration_noise: dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.1, 5.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const Eigen::Index S = 2 * (2 * n_states);  // 2d sinusoids per channel, d = 2n
  std::vector<std::vector<std::pair<double, double>>> waves(static_cast<std::size_t>(m));
  for (auto& channel : waves)
    for (Eigen::Index s = 0; s < S; ++s) channel.emplace_back(freq(rng), phase(rng));
  const double per_wave = amplitude / static_cast<double>(S);
  return [waves, per_wave, m](double t) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (Eigen::Index c = 0; c < m; ++c)
      for (const auto& [f, ph] : waves[static_cast<std::size_t>(c)])
        e[c] += per_wave * std::sin(2.0 * std::numbers::pi * f * t + ph);
    return e;
  };
}

DataLog collect_data(const sim::LtiPlant& plant, const BehaviorPolicy& behavior_u,
                     const std::function<Eigen::VectorXd(double)>& noise, const HyperParams& theta0,
                     int N, double T_int, double dt, const Eigen::VectorXd& x0, double blowup) {
  plant.validate();
  theta0.validate();
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index m = plant.input_dim();
  const Eigen::Index d = 2 * n;
  const Eigen::Index required = quadratic_basis_size(d) + m * d;
  if (N < required)
    throw ConfigError("collect_data: " + std::to_string(N) + " intervals requested but " +
                      std::to_string(required) + " are required (l1 + m*l2 = " +
                      std::to_string(quadratic_basis_size(d)) + " + " + std::to_string(m * d) +
                      ")");
  if (x0.size() != n) throw DimensionError("collect_data: x0 dimension mismatch");
  const auto steps = static_cast<std::size_t>(std::llround(T_int / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - T_int) > 1e-9)
    throw ConfigError("collect_data: T_int must be an integer multiple of dt");

  DataLog log;
  log.gamma = 0.0;  // caller sets the discount before solving
  log.dt = dt;
  log.T_int = T_int;
  log.meta = "sinusoidal exploration, behavior feedback";
  log.intervals.reserve(static_cast<std::size_t>(N));

  Eigen::VectorXd x = x0;
  double t = 0.0;
  for (int i = 0; i < N; ++i) {
    LogInterval iv;
    iv.x.reserve(steps + 1);
    iv.u.reserve(steps + 1);
    for (std::size_t s = 0; s <= steps; ++s) {
      if (x.cwiseAbs().maxCoeff() > blowup || !x.allFinite())
        throw NumericError("collect_data: state blew up at t = " + std::to_string(t));
      const Eigen::VectorXd u = behavior_u(t, x) + noise(t);
      if (u.size() != m) throw DimensionError("collect_data: behavior policy output dimension mismatch");
      iv.x.push_back(x);
      iv.u.push_back(u);
      if (s < steps) {
        x = sim::rk4_step(plant, x, u, dt);
        t += dt;
      }
    }
    log.intervals.push_back(std::move(iv));
  }
  return log;
}

namespace {

Eigen::VectorXd augmented_state(const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
  Eigen::VectorXd X(2 * x.size());
  X << x - r, r;
  return X;
}

}  // namespace

void build_regressors(const DataLog& log, const HyperParams& theta, const Eigen::MatrixXd& w_bar_k,
                      Eigen::MatrixXd& Theta_k, Eigen::VectorXd& Xi_k) {
  log.validate();
  theta.validate();
  const Eigen::Index n = log.state_dim();
  const Eigen::Index m = log.input_dim();
  const Eigen::Index d = 2 * n;
  const Eigen::Index l1 = quadratic_basis_size(d);
  if (theta.q_diag.size() != n) throw DimensionError("build_regressors: q_diag size != state dim");
  if (theta.r_diag.size() != m) throw DimensionError("build_regressors: r_diag size != input dim");
  if (theta.setpoint.size() != n) throw DimensionError("build_regressors: setpoint size != state dim");
  if (w_bar_k.rows() != d || w_bar_k.cols() != m)
    throw DimensionError("build_regressors: policy matrix must be d x m");

  Eigen::MatrixXd Qbar = Eigen::MatrixXd::Zero(d, d);
  Qbar.topLeftCorner(n, n) = theta.q_diag.asDiagonal();
  const Eigen::MatrixXd R = theta.r_diag.asDiagonal();
  const Eigen::VectorXd& r = theta.setpoint;
  const double gamma = log.gamma;
  const double dt = log.dt;

  const auto N = static_cast<Eigen::Index>(log.intervals.size());
  Theta_k.resize(N, l1 + m * d);
  Xi_k.resize(N);

  for (Eigen::Index i = 0; i < N; ++i) {
    const LogInterval& iv = log.intervals[static_cast<std::size_t>(i)];
    const std::size_t S = iv.x.size();

    // Discounted trapezoid accumulation of X X' and X u' over the interval.
    // The input is a zero-order hold: over each integrator step the left
    // node's u applies throughout, so only X is interpolated.
    Eigen::MatrixXd Ivv = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd Ixu = Eigen::MatrixXd::Zero(d, m);
    Eigen::MatrixXd XX_prev;
    Eigen::VectorXd dX_prev;
    for (std::size_t s = 0; s < S; ++s) {
      const Eigen::VectorXd X = augmented_state(iv.x[s], r);
      const double disc = std::exp(-gamma * static_cast<double>(s) * dt);
      const Eigen::VectorXd dX = disc * X;
      const Eigen::MatrixXd XX = dX * X.transpose();
      if (s > 0) {
        Ivv += 0.5 * dt * (XX_prev + XX);
        Ixu += 0.5 * dt * (dX_prev + dX) * iv.u[s - 1].transpose();
      }
      XX_prev = XX;
      dX_prev = dX;
    }
    const Eigen::VectorXd X_start = augmented_state(iv.x.front(), r);
    const Eigen::VectorXd X_end = augmented_state(iv.x.back(), r);

    const Eigen::VectorXd dphi =
        std::exp(-gamma * log.T_int) * quadratic_basis(X_end) - quadratic_basis(X_start);
    const Eigen::MatrixXd Cw = 2.0 * (Ixu * R - Ivv * w_bar_k * R);  // d x m

    Theta_k.row(i).head(l1) = dphi;
    Theta_k.row(i).tail(m * d) = Eigen::Map<const Eigen::VectorXd>(Cw.data(), m * d);
    Xi_k[i] = -(Qbar * Ivv).trace() - (w_bar_k * R * w_bar_k.transpose() * Ivv).trace();
  }
}

PolicyWeights policy_iteration_step(const Eigen::MatrixXd& Theta_k, const Eigen::VectorXd& Xi_k,
                                    Eigen::Index d, Eigen::Index m) {
  const Eigen::Index l1 = quadratic_basis_size(d);
  if (Theta_k.cols() != l1 + m * d)
    throw DimensionError("policy_iteration_step: regressor column count mismatch");
  if (Theta_k.rows() != Xi_k.size())
    throw DimensionError("policy_iteration_step: row count mismatch");

  // Basis directions the data never visits (e.g. every setpoint coordinate
  // when r = 0) produce exactly-zero columns; their weights are unidentifiable
  // and irrelevant, so they are pinned to zero and excluded from the rank test.
  const double col_floor = 1e-12 * (1.0 + Theta_k.colwise().norm().maxCoeff());
  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < Theta_k.cols(); ++c)
    if (Theta_k.col(c).norm() > col_floor) kept.push_back(c);

  if (kept.empty())
    throw NumericError(
        "policy_iteration_step: regressor matrix rank deficient (numerical rank 0 of " +
        std::to_string(Theta_k.cols()) + " over " + std::to_string(Theta_k.rows()) +
        " intervals); excitation insufficient");
  // Equilibrate the kept columns to unit norm before factoring: the basis
  // functions span wildly different scales (e.g. quadratic terms of a large
  // drifting coordinate against small input cross terms), and the rank test
  // should measure directional deficiency, not scale disparity.
  Eigen::MatrixXd reduced(Theta_k.rows(), static_cast<Eigen::Index>(kept.size()));
  Eigen::VectorXd scale(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    scale[cc] = Theta_k.col(kept[c]).norm();
    reduced.col(cc) = Theta_k.col(kept[c]) / scale[cc];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reduced);
  qr.setThreshold(1e-10);
  if (qr.rank() < reduced.cols())
    throw NumericError("policy_iteration_step: regressor matrix rank deficient (numerical rank " +
                       std::to_string(qr.rank()) + " of " + std::to_string(Theta_k.cols()) +
                       " over " + std::to_string(Theta_k.rows()) +
                       " intervals); excitation insufficient");
  const Eigen::VectorXd reduced_sol = qr.solve(Xi_k).cwiseQuotient(scale);
  Eigen::VectorXd sol = Eigen::VectorXd::Zero(Theta_k.cols());
  for (std::size_t c = 0; c < kept.size(); ++c) sol[kept[c]] = reduced_sol[static_cast<Eigen::Index>(c)];

  PolicyWeights w;
  w.w_v = sol.head(l1);
  w.w_bar = Eigen::Map<const Eigen::MatrixXd>(sol.tail(m * d).data(), d, m);
  return w;
}

SolveReport solve_policy(const DataLog& log, const HyperParams& theta, double eps, int max_iter,
                         const Eigen::MatrixXd& w_bar0) {
  log.validate();
  const Eigen::Index d = 2 * log.state_dim();
  const Eigen::Index m = log.input_dim();
  const Eigen::Index required = quadratic_basis_size(d) + m * d;
  if (static_cast<Eigen::Index>(log.intervals.size()) < required)
    throw ConfigError("solve_policy: log holds " + std::to_string(log.intervals.size()) +
                      " intervals but " + std::to_string(required) + " are required");

  SolveReport report;
  Eigen::MatrixXd w_bar = Eigen::MatrixXd::Zero(d, m);
  if (w_bar0.size() != 0) {
    if (w_bar0.rows() != d || w_bar0.cols() != m)
      throw DimensionError("solve_policy: initial policy must be d x m");
    w_bar = w_bar0;
  }
  Eigen::VectorXd w_v_prev = Eigen::VectorXd::Zero(quadratic_basis_size(d));
  Eigen::MatrixXd Theta_k;
  Eigen::VectorXd Xi_k;
  for (int k = 1; k <= max_iter; ++k) {
    build_regressors(log, theta, w_bar, Theta_k, Xi_k);
    PolicyWeights w = policy_iteration_step(Theta_k, Xi_k, d, m);
    const double change = (w.w_v - w_v_prev).norm();
    report.value_changes.push_back(change);
    report.iterations = k;
    w_bar = w.w_bar;
    w_v_prev = w.w_v;
    if (change <= eps) {
      report.weights = std::move(w);
      return report;
    }
  }
  std::ostringstream msg;
  msg << "solve_policy: no convergence after " << max_iter << " iterations; value changes:";
  for (double c : report.value_changes) msg << ' ' << c;
  throw NumericError(msg.str());
}

void serialize_datalog(const DataLog& log, std::ostream& os) {
  log.validate();
  os.precision(17);
  os << "metacog-datalog 1\n";
  os << log.state_dim() << ' ' << log.input_dim() << ' ' << log.dt << ' ' << log.gamma << ' '
     << log.intervals.size() << ' ' << log.T_int << '\n';
  os << log.meta << '\n';
  for (const auto& iv : log.intervals) {
    os << iv.x.size() << '\n';
    for (std::size_t s = 0; s < iv.x.size(); ++s) {
      for (Eigen::Index j = 0; j < iv.x[s].size(); ++j) os << iv.x[s][j] << ' ';
      for (Eigen::Index j = 0; j < iv.u[s].size(); ++j) os << iv.u[s][j] << ' ';
      os << '\n';
    }
  }
}

DataLog deserialize_datalog(std::istream& is) {
  std::string magic, version;
  is >> magic >> version;
  if (magic != "metacog-datalog" || version != "1")
    throw ParseError("datalog: unrecognized header", 1, 1);
  Eigen::Index n = 0, m = 0;
  std::size_t N = 0;
  DataLog log;
  is >> n >> m >> log.dt >> log.gamma >> N >> log.T_int;
  is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  std::getline(is, log.meta);
  if (!is || n < 1 || m < 1 || N < 1) throw ParseError("datalog: malformed header", 2, 1);
  log.intervals.resize(N);
  for (auto& iv : log.intervals) {
    std::size_t S = 0;
    is >> S;
    if (!is || S < 2) throw ParseError("datalog: malformed interval header", 0, 0);
    iv.x.assign(S, Eigen::VectorXd(n));
    iv.u.assign(S, Eigen::VectorXd(m));
    for (std::size_t s = 0; s < S; ++s) {
      for (Eigen::Index j = 0; j < n; ++j) is >> iv.x[s][j];
      for (Eigen::Index j = 0; j < m; ++j) is >> iv.u[s][j];
    }
    if (!is) throw ParseError("datalog: truncated sample block", 0, 0);
  }
  log.validate();
  return log;
}

}  // namespace metacog::rl
