#include "metacog/gp/posterior.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace metacog::gp {

namespace {

// Symmetric solve with jitter escalation 1e-10 -> 1e-6 of the mean diagonal.
class SymSolver {
 public:
  explicit SymSolver(const Eigen::MatrixXd& A) {
    const double scale = A.rows() > 0 ? A.trace() / static_cast<double>(A.rows()) : 1.0;
    const double base = scale > 0.0 ? scale : 1.0;
    for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
      Eigen::MatrixXd Aj = A;
      Aj.diagonal().array() += jitter * base;
      ldlt_.compute(Aj);
      if (ldlt_.info() == Eigen::Success && ldlt_.isPositive()) return;
    }
    throw NumericError("singular system matrix in GP solve (jitter escalation exhausted)");
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const { return ldlt_.solve(B); }

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

Eigen::MatrixXd difference_operator(Eigen::Index L, double a, double T, TdMode mode) {
  const double succ = mode == TdMode::Discounted ? std::exp(-a * T) : 1.0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(L - 1, L);
  for (Eigen::Index i = 0; i + 1 < L; ++i) {
    H(i, i) = 1.0;
    H(i, i + 1) = -succ;
  }
  return H;
}

double logdet_lu(const Eigen::MatrixXd& M) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::MatrixXd& U = lu.matrixLU();
  // Matrices here are similar to SPD ones, so the determinant is positive.
  double s = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) s += std::log(std::abs(U(i, i)));
  return s;
}

}  // namespace

void GpPosterior::validate() const {
  if (!kernel.valid()) throw ConfigError("GP posterior has no kernel");
  if (alpha.size() != inducing.rows() || C.rows() != inducing.rows() || C.cols() != inducing.rows())
    throw DimensionError("GP posterior coefficient shapes do not match inducing count");
  if (inducing.rows() > 0 && inducing.cols() < kernel.min_input_dim())
    throw DimensionError("GP inducing input dimension below kernel requirement");
}

Prediction gp_predict(const GpPosterior& gp, const Eigen::VectorXd& query) {
  gp.validate();
  if (gp.num_inducing() > 0 && query.size() != gp.inducing.cols())
    throw DimensionError("gp_predict: query dimension " + std::to_string(query.size()) +
                         " does not match inducing dimension " + std::to_string(gp.inducing.cols()));
  Prediction out;
  const double prior_var = gp.kernel(query, query);
  if (gp.num_inducing() == 0) {
    out.mean = gp.prior_mean;
    out.variance = prior_var;
    return out;
  }
  const Eigen::VectorXd k = gp.kernel.covariance_vector(gp.inducing, query);
  out.mean = gp.prior_mean + k.dot(gp.alpha);
  double var = prior_var - k.dot(gp.C * k);
  if (var < 0.0) {
    if (var < -1e-6 * std::max(1.0, prior_var))
      throw NumericError("gp_predict: variance clamp beyond tolerance (" + std::to_string(var) + ")");
    var = 0.0;
  }
  out.variance = var;
  return out;
}

GpPosterior fit_direct(const Kernel& kernel, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double noise_w2, double prior_mean) {
  if (X.rows() != y.size()) throw DimensionError("fit_direct: observation count mismatch");
  if (noise_w2 < 0.0) throw ConfigError("fit_direct: negative noise variance");
  GpPosterior gp;
  gp.kernel = kernel;
  gp.inducing = X;
  gp.noise_w2 = noise_w2;
  gp.prior_mean = prior_mean;
  const Eigen::Index L = X.rows();
  if (L == 0) {
    gp.alpha.resize(0);
    gp.C.resize(0, 0);
    return gp;
  }
  Eigen::MatrixXd A = kernel.gram(X);
  A.diagonal().array() += noise_w2;
  SymSolver solver(A);
  gp.alpha = solver.solve((y.array() - prior_mean).matrix());
  gp.C = solver.solve(Eigen::MatrixXd::Identity(L, L));
  gp.C = 0.5 * (gp.C + gp.C.transpose()).eval();
  return gp;
}

GpPosterior gptd_fit(const Kernel& kernel, const Eigen::MatrixXd& inducing,
                     const Eigen::VectorXd& rewards, double noise_w2, double discount_rate,
                     double td_interval, TdMode mode, double prior_mean) {
  const Eigen::Index L = inducing.rows();
  if (L < 2) throw DimensionError("gptd_fit needs at least two inducing samples");
  if (rewards.size() != L - 1)
    throw DimensionError("gptd_fit: rewards length " + std::to_string(rewards.size()) +
                         " must be inducing count minus one (" + std::to_string(L - 1) + ")");
  if (noise_w2 <= 0.0) throw ConfigError("gptd_fit: noise variance must be positive");

  const Eigen::MatrixXd K = kernel.gram(inducing);
  const Eigen::MatrixXd H = difference_operator(L, discount_rate, td_interval, mode);
  Eigen::MatrixXd A = H * K * H.transpose();
  A.diagonal().array() += noise_w2;
  SymSolver solver(A);

  // Center the observations on the prior mean pushed through H.
  const Eigen::VectorXd prior_obs = H * Eigen::VectorXd::Constant(L, prior_mean);
  const Eigen::VectorXd resid = rewards - prior_obs;

  GpPosterior gp;
  gp.kernel = kernel;
  gp.inducing = inducing;
  gp.noise_w2 = noise_w2;
  gp.prior_mean = prior_mean;
  gp.alpha = H.transpose() * solver.solve(resid);
  gp.C = H.transpose() * solver.solve(H);
  gp.C = 0.5 * (gp.C + gp.C.transpose()).eval();
  return gp;
}

GpPosterior gptd_fit(const Trajectory& traj, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& rewards, const Kernel& kernel, double noise_w2,
                     double discount_rate, double td_interval, TdMode mode, double prior_mean) {
  traj.validate();
  const auto stride = static_cast<std::size_t>(std::llround(td_interval / traj.dt));
  if (stride == 0 || std::abs(stride * traj.dt - td_interval) > 1e-9)
    throw ConfigError("gptd_fit: TD interval must be an integer multiple of trajectory dt");
  const std::size_t L = (traj.size() - 1) / stride + 1;
  const Eigen::Index n = traj.state_dim();
  Eigen::MatrixXd inducing(static_cast<Eigen::Index>(L), n + theta.size());
  for (std::size_t i = 0; i < L; ++i) {
    inducing.row(static_cast<Eigen::Index>(i)).head(n) = traj.states[i * stride];
    inducing.row(static_cast<Eigen::Index>(i)).tail(theta.size()) = theta;
  }
  return gptd_fit(kernel, inducing, rewards, noise_w2, discount_rate, td_interval, mode, prior_mean);
}

double gp_kl(const GpPosterior& g1, const GpPosterior& g2) {
  g1.validate();
  g2.validate();
  if (g1.inducing.rows() != g2.inducing.rows() || g1.inducing.cols() != g2.inducing.cols() ||
      (g1.inducing - g2.inducing).cwiseAbs().maxCoeff() > 1e-9)
    throw DimensionError("gp_kl: GPs must share inducing inputs (shift_inducing first)");
  const Eigen::Index L = g1.inducing.rows();
  const Eigen::MatrixXd K = g1.kernel.gram(g1.inducing);
  // Q + C_i = K^{-1} (I + K C_i); all Q-terms reduce to M_i = I + K C_i.
  const Eigen::MatrixXd M1 = Eigen::MatrixXd::Identity(L, L) + K * g1.C;
  const Eigen::MatrixXd M2 = Eigen::MatrixXd::Identity(L, L) + K * g2.C;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu1(M1);
  const Eigen::VectorXd da = g1.alpha - g2.alpha;
  const double quad = da.dot(lu1.solve(K * da));  // da^T (Q + C1)^{-1} da
  const double trace = lu1.solve(M2).trace();
  const double logdet = logdet_lu(M2) - logdet_lu(M1);
  return quad + trace - static_cast<double>(L) - logdet;
}

GpPosterior shift_inducing(const GpPosterior& base, const Eigen::MatrixXd& targets) {
  base.validate();
  if (targets.rows() == 0) throw DimensionError("shift_inducing: empty target set");
  if (targets.cols() != base.inducing.cols())
    throw DimensionError("shift_inducing: target dimension mismatch");

  const Eigen::Index Z = targets.rows();
  const Eigen::MatrixXd Kzz = base.kernel.gram(targets);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Kzz);
  const double cond = svd.singularValues()(0) / svd.singularValues()(Z - 1);
  if (!(cond < 1e12))
    throw NumericError("shift_inducing: target Gram condition number " + std::to_string(cond));

  Eigen::MatrixXd Kzx(Z, base.inducing.rows());
  for (Eigen::Index i = 0; i < Z; ++i)
    Kzx.row(i) = base.kernel.covariance_vector(base.inducing, targets.row(i)).transpose();

  // Match predictive moments at the targets:
  //   Kzz alpha' = Kzx alpha,  Kzz C' Kzz = Kzx C Kzx^T.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Kzz);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("shift_inducing: target Gram factorization failed");
  GpPosterior out;
  out.kernel = base.kernel;
  out.inducing = targets;
  out.noise_w2 = base.noise_w2;
  out.prior_mean = base.prior_mean;
  out.alpha = ldlt.solve(Kzx * base.alpha);
  const Eigen::MatrixXd half = ldlt.solve(Kzx * base.C * Kzx.transpose());
  out.C = ldlt.solve(half.transpose()).transpose();
  out.C = 0.5 * (out.C + out.C.transpose()).eval();
  return out;
}

void serialize(const GpPosterior& gp, std::ostream& os) {
  gp.validate();
  os << "metacog-gp 1\n";
  gp.kernel.serialize(os);
  os.precision(17);
  os << gp.noise_w2 << " " << gp.prior_mean << "\n";
  os << gp.inducing.rows() << " " << gp.inducing.cols() << "\n";
  for (Eigen::Index i = 0; i < gp.inducing.rows(); ++i) {
    for (Eigen::Index j = 0; j < gp.inducing.cols(); ++j) os << gp.inducing(i, j) << " ";
    os << "\n";
  }
  for (Eigen::Index i = 0; i < gp.alpha.size(); ++i) os << gp.alpha[i] << " ";
  os << "\n";
  for (Eigen::Index i = 0; i < gp.C.rows(); ++i) {
    for (Eigen::Index j = 0; j < gp.C.cols(); ++j) os << gp.C(i, j) << " ";
    os << "\n";
  }
}

GpPosterior deserialize_gp(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "metacog-gp" || version != 1)
    throw ConfigError("not a metacog GP record (bad magic/version)");
  GpPosterior gp;
  gp.kernel = Kernel::deserialize(is);
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> gp.noise_w2 >> gp.prior_mean >> rows >> cols)) throw ConfigError("truncated GP record");
  gp.inducing.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(is >> gp.inducing(i, j))) throw ConfigError("truncated GP inducing block");
  gp.alpha.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    if (!(is >> gp.alpha[i])) throw ConfigError("truncated GP alpha block");
  gp.C.resize(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < rows; ++j)
      if (!(is >> gp.C(i, j))) throw ConfigError("truncated GP C block");
  gp.validate();
  return gp;
}

}  // namespace metacog::gp
