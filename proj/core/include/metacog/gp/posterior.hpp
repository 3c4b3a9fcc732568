#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "metacog/gp/kernel.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::gp {

/// Whether the temporal-difference rows discount the successor sample.
enum class TdMode {
  Discounted,  // rows [1, -exp(-a T)]
  Literal,     // rows [1, -1]
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Fitted GP in (alpha, C) coefficient form: mean(q) = m0 + k(q,X)^T alpha,
/// var(q) = k(q,q) - k(q,X)^T C k(q,X). Immutable after fit.
struct GpPosterior {
  Kernel kernel;
  Eigen::MatrixXd inducing;  // one joint input per row
  Eigen::VectorXd alpha;
  Eigen::MatrixXd C;
  double noise_w2 = 1e-6;
  double prior_mean = 0.0;

  Eigen::Index num_inducing() const { return inducing.rows(); }
  void validate() const;
};

/// GPs fitted offline to minimum-acceptable-robustness templates. All
/// entries share one kernel; must be non-empty before monitoring begins.
struct BaseGpLibrary {
  std::vector<GpPosterior> entries;
};

/// Posterior mean/variance at a query; variance is clamped at zero from
/// below (clamp magnitude beyond 1e-8 raises NumericError).
Prediction gp_predict(const GpPosterior& gp, const Eigen::VectorXd& query);

/// Exact GP regression on direct observations y_i = f(x_i) + noise.
GpPosterior fit_direct(const Kernel& kernel, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double noise_w2, double prior_mean = 0.0);

/// GPTD fit from integral meta-rewards: rewards[i] observes
/// f(x_i) - e^{-aT} f(x_{i+1}) (discounted mode) via the first-difference
/// operator. rewards.size() must be inducing.rows() - 1.
GpPosterior gptd_fit(const Kernel& kernel, const Eigen::MatrixXd& inducing,
                     const Eigen::VectorXd& rewards, double noise_w2, double discount_rate,
                     double td_interval, TdMode mode = TdMode::Discounted, double prior_mean = 0.0);

/// Convenience overload: inducing inputs are trajectory samples taken every
/// td_interval seconds with the hyperparameter coordinates appended.
GpPosterior gptd_fit(const Trajectory& traj, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& rewards, const Kernel& kernel, double noise_w2,
                     double discount_rate, double td_interval, TdMode mode = TdMode::Discounted,
                     double prior_mean = 0.0);

/// KL divergence between two GPs sharing inducing inputs and kernel:
/// (a1-a2)^T V (a1-a2) + Tr[(Q+C2)V - I] - logdet[(Q+C2)V], V = (Q+C1)^{-1},
/// Q the inverse Gram matrix of the shared inducing set.
double gp_kl(const GpPosterior& g1, const GpPosterior& g2);

/// Re-express a GP over a new inducing set; predictions at the targets are
/// preserved (kernel projection). Ill-conditioned target Gram raises.
GpPosterior shift_inducing(const GpPosterior& base, const Eigen::MatrixXd& targets);

void serialize(const GpPosterior& gp, std::ostream& os);
GpPosterior deserialize_gp(std::istream& is);

}  // namespace metacog::gp
