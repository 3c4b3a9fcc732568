#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "metacog/gp/posterior.hpp"
#include "metacog/hyperparams.hpp"

namespace metacog::sbo {

/// Finite search domain: per-coordinate box discretized at a fixed
/// resolution. Coordinates with lo == hi are pinned (non-decision).
struct DomainGrid {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  Eigen::VectorXi resolution;          // points per coordinate, >= 1
  std::size_t max_points = 100000;

  std::vector<Eigen::VectorXd> enumerate() const;
};

struct SboConfig {
  double beta_k = 3.0;       // confidence multiplier (constant schedule)
  double p_min = 0.0;        // safety threshold on the survival score
  double noise_w2 = 1e-6;    // score observation noise for the GP
  double lengthscale_factor = 0.4;  // lengthscale = factor * (hi - lo)
  int budget = 30;
};

/// Survival score P(theta) = -H(theta): negated distance-to-incumbent plus
/// a barrier on the KL safety margin. Unsafe candidates (min KL >= varpi)
/// map below p_min, monotonically in the excess KL.
double survival_score(const Eigen::VectorXd& theta_flat, const gp::GpPosterior& fitness_gp,
                      const gp::BaseGpLibrary& bases, const Eigen::VectorXd& theta_star_flat,
                      double varpi, double p_min);

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

enum class SetMembership { None, Safe, Maximizer, Expander };

struct SboState {
  std::vector<Eigen::VectorXd> grid;
  gp::GpPosterior score_gp;
  std::vector<std::pair<Eigen::VectorXd, double>> observed;
  SboConfig cfg;
  Eigen::VectorXd reference;  // incumbent used for tie-breaks
  std::vector<Bounds> bounds;            // per grid point
  std::vector<SetMembership> membership; // per grid point
};

/// Confidence interval of the score GP at one point.
Bounds confidence_bounds(const SboState& state, const Eigen::VectorXd& theta);

/// Recompute bounds, the safe set, maximizers and expanders over the grid.
/// Raises NumericError if the safe set is empty (seed no longer safe).
void update_sets(SboState& state);

/// Most-uncertain point of the maximizer/expander union; ties broken by
/// distance to the reference, then grid order. Returns -1 if both empty.
long select_candidate(const SboState& state);

struct SboHistoryRow {
  int k = 0;
  Eigen::VectorXd theta;
  double score = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string set_membership;
};

struct SboResult {
  Eigen::VectorXd best;
  double best_lower = 0.0;
  std::vector<SboHistoryRow> history;
};

/// Safe Bayesian optimization over the grid starting from a safe seed.
SboResult sbo_run(const Eigen::VectorXd& seed, const std::function<double(const Eigen::VectorXd&)>& evaluator,
                  const DomainGrid& grid, const SboConfig& cfg);

}  // namespace metacog::sbo
