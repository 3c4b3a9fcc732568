#include "metacog/rl/riccati.hpp"

#include <cmath>

namespace metacog::rl {

namespace {

bool is_hurwitz(const Eigen::MatrixXd& A) {
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
  return (eigs.real().array() < 0.0).all();
}

// Bass' stabilizing-gain construction: for beta > ‖A‖, solving
// (A + beta I) Z + Z (A + beta I)' = 2 B B' gives K = B' Z^{-1} with
// A - B K Hurwitz, provided (A, B) is controllable.
Eigen::MatrixXd bass_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const double beta = 2.0 * A.norm() + 1.0;
  const Eigen::MatrixXd As = -(A + beta * Eigen::MatrixXd::Identity(n, n));
  // As is Hurwitz by construction, so the Lyapunov solve is well posed.
  const Eigen::MatrixXd Z = lyapunov_solve(As.transpose(), 2.0 * B * B.transpose());
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(Z);
  if (!lu.isInvertible())
    throw NumericError("riccati_oracle: could not construct a stabilizing initial gain "
                       "(pair appears non-stabilizable)");
  return B.transpose() * lu.inverse();
}

}  // namespace

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DimensionError("lyapunov_solve: A and Q must be square of equal size");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd M(n * n, n * n);
  // vec(A'P + PA) = (I ⊗ A' + A' ⊗ I) vec(P)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      M.block(i * n, j * n, n, n) = I(i, j) * A.transpose() + A.transpose()(i, j) * I;
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd p = lu.solve(-q);
  if (!p.allFinite() || (M * p + q).norm() > 1e-6 * (1.0 + q.norm()))
    throw NumericError("lyapunov_solve: singular operator (A not Hurwitz?)");
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

RiccatiSolution riccati_oracle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n) throw DimensionError("riccati_oracle: A/B shape mismatch");
  if (Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m)
    throw DimensionError("riccati_oracle: Q/R shape mismatch");
  if (gamma < 0.0) throw ConfigError("riccati_oracle: gamma must be nonnegative");

  const Eigen::MatrixXd As = A - 0.5 * gamma * Eigen::MatrixXd::Identity(n, n);
  const Eigen::LLT<Eigen::MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success)
    throw NumericError("riccati_oracle: R must be positive definite");

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, n);
  if (!is_hurwitz(As)) K = bass_gain(As, B);

  RiccatiSolution sol;
  Eigen::MatrixXd P_prev;
  constexpr int kMaxIter = 200;
  for (int k = 0; k < kMaxIter; ++k) {
    const Eigen::MatrixXd Ak = As - B * K;
    if (!is_hurwitz(Ak))
      throw NumericError("riccati_oracle: policy iterate lost stability "
                         "(pair appears non-stabilizable)");
    const Eigen::MatrixXd P = lyapunov_solve(Ak, Q + K.transpose() * R * K);
    K = rllt.solve(B.transpose() * P);
    sol.iterations = k + 1;
    if (k > 0 && (P - P_prev).norm() <= 1e-10) {
      sol.P = P;
      sol.K = K;
      return sol;
    }
    P_prev = P;
  }
  throw NumericError("riccati_oracle: no convergence after " + std::to_string(kMaxIter) +
                     " iterations");
}

}  // namespace metacog::rl
