#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "metacog/hyperparams.hpp"
#include "metacog/sim/plant.hpp"

namespace metacog::rl {

/// One recorded exploration interval [t_{i-1}, t_i]: raw plant states and
/// applied inputs (behavior feedback plus exploration noise) at integrator
/// resolution, both endpoints included.
struct LogInterval {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u;
};

/// Immutable exploration record. One log serves policy solves for every
/// admissible hyperparameter value: the augmented tracking state is
/// recomputed from the raw samples and the queried setpoint.
struct DataLog {
  std::vector<LogInterval> intervals;
  double gamma = 0.0;
  double dt = 0.0;
  double T_int = 0.0;  // interval length, seconds
  std::string meta;    // free-form exploration descriptor

  Eigen::Index state_dim() const;
  Eigen::Index input_dim() const;
  void validate() const;
};

struct PolicyWeights {
  Eigen::VectorXd w_v;     // value weights over the quadratic basis, length l1
  Eigen::MatrixXd w_bar;   // policy matrix, d x m; u(X) = w_bar' X
};

/// Basis sizes for state dimension n: the augmented state X = [x - r; r]
/// has d = 2n coordinates; the value basis is the distinct quadratic
/// monomials (l1 = d(d+1)/2) and the policy basis is X itself (l2 = d).
Eigen::Index quadratic_basis_size(Eigen::Index d);
Eigen::VectorXd quadratic_basis(const Eigen::VectorXd& X);
/// Symmetric matrix P with X'PX = w_v' phi1(X).
Eigen::MatrixXd value_matrix(const Eigen::VectorXd& w_v, Eigen::Index d);

/// Sum of 2d sinusoids with frequencies drawn once from [0.1, 5] Hz by the
/// seeded generator; every input channel gets an independent draw.
std::function<Eigen::VectorXd(double)> make_exploration_noise(std::uint64_t seed, Eigen::Index m,
                                                              Eigen::Index n_states,
                                                              double amplitude);

using BehaviorPolicy = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Run the plant under behavior_u plus exploration noise and record N
/// intervals of T_int seconds at step dt. Requires N >= l1 + m*l2.
DataLog collect_data(const sim::LtiPlant& plant, const BehaviorPolicy& behavior_u,
                     const std::function<Eigen::VectorXd(double)>& noise, const HyperParams& theta0,
                     int N, double T_int, double dt, const Eigen::VectorXd& x0,
                     double blowup = 1e6);

/// Assemble the least-squares system of one policy-evaluation step for the
/// query hyperparameters and the current policy estimate w_bar_k. Row i:
///   [dphi_i',  2 vec(I_xu R)' - 2 vec(I_vv w_bar_k R)'] [w_v; vec(W)]
///     = -tr(Qbar I_vv) - tr(w_bar_k R w_bar_k' I_vv)
/// with I_vv = ∫ e^{-γ(τ-t)} X X' dτ and I_xu = ∫ e^{-γ(τ-t)} X u' dτ over
/// the interval (trapezoid at log resolution).
void build_regressors(const DataLog& log, const HyperParams& theta, const Eigen::MatrixXd& w_bar_k,
                      Eigen::MatrixXd& Theta_k, Eigen::VectorXd& Xi_k);

/// Least-squares solve of one iteration via orthogonal factorization.
/// Raises NumericError with the numerical rank and row count when the
/// regressor matrix is rank deficient.
PolicyWeights policy_iteration_step(const Eigen::MatrixXd& Theta_k, const Eigen::VectorXd& Xi_k,
                                    Eigen::Index d, Eigen::Index m);

struct SolveReport {
  PolicyWeights weights;
  int iterations = 0;
  std::vector<double> value_changes;  // ‖w_v^{k} - w_v^{k-1}‖ per iteration
};

/// Off-policy policy iteration on the frozen log: iterate
/// build_regressors + policy_iteration_step from the initial policy until
/// the value-weight change drops to eps or max_iter is hit (then
/// NumericError carrying the change sequence). The default initial policy
/// is the zero matrix, which suffices for open-loop-stable plants; for
/// unstable plants pass a stabilizing gain (typically the behavior
/// policy's) or the iteration settles on the anti-stabilizing value.
SolveReport solve_policy(const DataLog& log, const HyperParams& theta, double eps = 1e-8,
                         int max_iter = 30, const Eigen::MatrixXd& w_bar0 = Eigen::MatrixXd());

/// Structured-text round trip, exact at double precision.
void serialize_datalog(const DataLog& log, std::ostream& os);
DataLog deserialize_datalog(std::istream& is);

}  // namespace metacog::rl
