#pragma once

// Independent reference implementations used to cross-check the library:
// written against the definitions directly, sharing no code with the
// implementations under test beyond the public data types.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "metacog/stl/ast.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::oracles {

/// Brute-force quantitative semantics: tabulate the robustness of every
/// subformula at every sample index by explicit window scans.
double brute_force_robustness(const stl::Formula& f, const Trajectory& traj, double t);

struct RandomFormula {
  stl::FormulaPtr formula;
  std::string text;
};

/// Random formula of bounded depth over the given component names, with
/// temporal windows inside [0, max_window] seconds.
RandomFormula random_formula(std::mt19937_64& rng, const std::vector<std::string>& schema,
                             int max_depth, double max_window);

/// Random piecewise-smooth signal with the given dimensions.
Trajectory random_signal(std::mt19937_64& rng, int dim, int samples, double dt);

/// Dense GP regression posterior at a query: mean/variance from the
/// textbook formula with one Cholesky of (K + noise I).
void dense_gp_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& kq, double kqq,
                        const Eigen::VectorXd& y, double noise, double prior_mean, double* mean,
                        double* variance);

/// KL divergence between N(mu1, S1) and N(mu2, S2), textbook form.
double gaussian_kl(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& S1,
                   const Eigen::VectorXd& mu2, const Eigen::MatrixXd& S2);

}  // namespace metacog::oracles
