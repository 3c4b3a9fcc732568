#pragma once

#include <Eigen/Dense>

#include "metacog/errors.hpp"

namespace metacog::rl {

struct RiccatiSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;  // u = -K x minimizes the discounted quadratic cost
  int iterations = 0;
};

/// Solve the continuous Lyapunov equation A'P + PA = -Q by vectorization.
/// Requires A Hurwitz; the result is symmetrized.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Model-based solution of the discounted LQR problem
///   min ∫ e^{-γ t} (x'Qx + u'Ru) dt  s.t.  ẋ = Ax + Bu,
/// equivalent to the undiscounted problem on the shifted pair
/// (A - (γ/2)I, B). Kleinman policy iteration with Lyapunov solves;
/// iterates until ‖P_{k+1} - P_k‖ ≤ 1e-10.
RiccatiSolution riccati_oracle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma);

}  // namespace metacog::rl
