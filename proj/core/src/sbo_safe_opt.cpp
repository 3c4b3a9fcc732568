#include "metacog/sbo/safe_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace metacog::sbo {

std::vector<Eigen::VectorXd> DomainGrid::enumerate() const {
  const Eigen::Index d = lo.size();
  if (hi.size() != d || resolution.size() != d)
    throw DimensionError("DomainGrid: lo/hi/resolution sizes differ");
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (resolution[i] < 1) throw ConfigError("DomainGrid: resolution must be >= 1");
    if (lo[i] > hi[i]) throw ConfigError("DomainGrid: lo > hi in coordinate " + std::to_string(i));
    if (resolution[i] > 1 && lo[i] == hi[i])
      throw ConfigError("DomainGrid: degenerate box with resolution > 1");
    total *= static_cast<std::size_t>(resolution[i]);
    if (total > max_points)
      throw ConfigError("DomainGrid: grid exceeds the configured point cap");
  }
  std::vector<Eigen::VectorXd> points;
  points.reserve(total);
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(d);
  Eigen::VectorXd p(d);
  for (std::size_t n = 0; n < total; ++n) {
    for (Eigen::Index i = 0; i < d; ++i) {
      p[i] = resolution[i] == 1
                 ? lo[i]
                 : lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[i]) / (resolution[i] - 1);
    }
    points.push_back(p);
    // odometer increment, last coordinate fastest
    for (Eigen::Index i = d - 1; i >= 0; --i) {
      if (++idx[i] < resolution[i]) break;
      idx[i] = 0;
    }
  }
  return points;
}

double survival_score(const Eigen::VectorXd& theta_flat, const gp::GpPosterior& fitness_gp,
                      const gp::BaseGpLibrary& bases, const Eigen::VectorXd& theta_star_flat,
                      double varpi, double p_min) {
  if (bases.entries.empty()) throw ConfigError("survival_score: base GP library is empty");
  double min_kl = std::numeric_limits<double>::infinity();
  for (const auto& base : bases.entries) {
    // Shift the candidate GP onto the base's well-spread inducing set; the
    // candidate's own trajectory samples may nearly coincide.
    const gp::GpPosterior shifted = gp::shift_inducing(fitness_gp, base.inducing);
    min_kl = std::min(min_kl, gp::gp_kl(shifted, base));
  }
  if (min_kl >= varpi) return p_min - 1.0 - (min_kl - varpi);
  const double h = (theta_flat - theta_star_flat).norm() + std::log1p(1.0 / (varpi - min_kl));
  return -h;
}

namespace {

gp::Kernel score_kernel(const DomainGrid& like, const std::vector<Eigen::VectorXd>& grid,
                        double factor) {
  // Lengthscales from the grid extent per coordinate; pinned coordinates
  // get a unit lengthscale (they never vary).
  const Eigen::Index d = grid.front().size();
  Eigen::VectorXd span = Eigen::VectorXd::Zero(d);
  for (const auto& p : grid) span = span.cwiseMax((p - grid.front()).cwiseAbs());
  Eigen::VectorXd ls(d);
  for (Eigen::Index i = 0; i < d; ++i) ls[i] = span[i] > 0.0 ? factor * span[i] : 1.0;
  (void)like;
  return gp::Kernel::squared_exponential(ls, 1.0);
}

gp::GpPosterior fit_score_gp(const gp::Kernel& kernel,
                             const std::vector<std::pair<Eigen::VectorXd, double>>& observed,
                             double noise_w2, double prior_mean) {
  const Eigen::Index n = static_cast<Eigen::Index>(observed.size());
  Eigen::MatrixXd X(n, observed.front().first.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = observed[static_cast<std::size_t>(i)].first;
    y[i] = observed[static_cast<std::size_t>(i)].second;
  }
  return gp::fit_direct(kernel, X, y, noise_w2, prior_mean);
}

}  // namespace

Bounds confidence_bounds(const SboState& state, const Eigen::VectorXd& theta) {
  const gp::Prediction p = gp::gp_predict(state.score_gp, theta);
  const double spread = state.cfg.beta_k * std::sqrt(std::max(0.0, p.variance));
  return {p.mean - spread, p.mean + spread};
}

void update_sets(SboState& state) {
  const std::size_t N = state.grid.size();
  state.bounds.resize(N);
  state.membership.assign(N, SetMembership::None);
  for (std::size_t i = 0; i < N; ++i) state.bounds[i] = confidence_bounds(state, state.grid[i]);

  // Safe set S_k.
  std::vector<std::size_t> safe;
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    if (state.bounds[i].lower >= state.cfg.p_min) {
      safe.push_back(i);
      state.membership[i] = SetMembership::Safe;
      best_lower = std::max(best_lower, state.bounds[i].lower);
    }
  }
  if (safe.empty())
    throw NumericError("SBO safe set is empty: seed no longer certified safe");

  // Potential maximizers T_k.
  for (std::size_t i : safe)
    if (state.bounds[i].upper >= best_lower) state.membership[i] = SetMembership::Maximizer;

  // Expanders G_k: adding the optimistic datum (theta, M_k(theta)) must
  // certify at least one currently-unsafe grid point.
  std::vector<std::size_t> unsafe;
  for (std::size_t i = 0; i < N; ++i)
    if (state.membership[i] == SetMembership::None) unsafe.push_back(i);
  if (!unsafe.empty()) {
    for (std::size_t i : safe) {
      if (state.membership[i] == SetMembership::Maximizer) continue;  // already a candidate
      auto hypothetical = state.observed;
      hypothetical.emplace_back(state.grid[i], state.bounds[i].upper);
      const gp::GpPosterior hgp = fit_score_gp(state.score_gp.kernel, hypothetical,
                                               state.cfg.noise_w2, state.cfg.p_min);
      bool expands = false;
      for (std::size_t j : unsafe) {
        const gp::Prediction p = gp::gp_predict(hgp, state.grid[j]);
        const double lower = p.mean - state.cfg.beta_k * std::sqrt(std::max(0.0, p.variance));
        if (lower >= state.cfg.p_min) {
          expands = true;
          break;
        }
      }
      if (expands) state.membership[i] = SetMembership::Expander;
    }
  }
}

long select_candidate(const SboState& state) {
  long best = -1;
  double best_width = -std::numeric_limits<double>::infinity();
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.grid.size(); ++i) {
    if (state.membership[i] != SetMembership::Maximizer &&
        state.membership[i] != SetMembership::Expander)
      continue;
    const double width = state.bounds[i].upper - state.bounds[i].lower;
    const double dist = (state.grid[i] - state.reference).norm();
    if (width > best_width + 1e-12 ||
        (std::abs(width - best_width) <= 1e-12 && dist < best_dist - 1e-12)) {
      best = static_cast<long>(i);
      best_width = width;
      best_dist = dist;
    }
  }
  return best;
}

SboResult sbo_run(const Eigen::VectorXd& seed,
                  const std::function<double(const Eigen::VectorXd&)>& evaluator,
                  const DomainGrid& grid, const SboConfig& cfg) {
  SboState state;
  state.grid = grid.enumerate();
  state.cfg = cfg;
  state.reference = seed;
  if (state.grid.empty()) throw ConfigError("sbo_run: empty grid");
  if (seed.size() != state.grid.front().size())
    throw DimensionError("sbo_run: seed dimension does not match grid");

  const gp::Kernel kernel = score_kernel(grid, state.grid, cfg.lengthscale_factor);
  SboResult result;

  const double seed_score = evaluator(seed);
  if (seed_score < cfg.p_min)
    throw NumericError("sbo_run: seed score " + std::to_string(seed_score) +
                       " is below the safety threshold " + std::to_string(cfg.p_min));
  state.observed.emplace_back(seed, seed_score);
  {
    SboHistoryRow row;
    row.k = 0;
    row.theta = seed;
    row.score = seed_score;
    row.lower = row.upper = seed_score;
    row.set_membership = "safe";
    result.history.push_back(std::move(row));
  }

  if (cfg.budget <= 0) {
    result.best = seed;
    result.best_lower = seed_score;
    return result;
  }

  for (int k = 1; k <= cfg.budget; ++k) {
    state.score_gp = fit_score_gp(kernel, state.observed, cfg.noise_w2, cfg.p_min);
    try {
      update_sets(state);
    } catch (const NumericError&) {
      break;  // no certified grid point; stop exploring, keep the seed
    }
    const long pick = select_candidate(state);
    if (pick < 0) break;  // converged: nothing left to evaluate
    const Eigen::VectorXd& theta = state.grid[static_cast<std::size_t>(pick)];
    const double score = evaluator(theta);
    SboHistoryRow row;
    row.k = k;
    row.theta = theta;
    row.score = score;
    row.lower = state.bounds[static_cast<std::size_t>(pick)].lower;
    row.upper = state.bounds[static_cast<std::size_t>(pick)].upper;
    row.set_membership =
        state.membership[static_cast<std::size_t>(pick)] == SetMembership::Expander ? "expander"
                                                                                    : "maximizer";
    result.history.push_back(std::move(row));
    state.observed.emplace_back(theta, score);
  }

  // Best lower bound over the final safe set. A coarse grid may leave no
  // certified grid point at all; fall back to the seed in that case.
  state.score_gp = fit_score_gp(kernel, state.observed, cfg.noise_w2, cfg.p_min);
  try {
    update_sets(state);
  } catch (const NumericError&) {
    result.best = seed;
    result.best_lower = seed_score;
    return result;
  }
  long best = -1;
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.grid.size(); ++i) {
    if (state.membership[i] == SetMembership::None) continue;
    if (state.bounds[i].lower > best_lower) {
      best_lower = state.bounds[i].lower;
      best = static_cast<long>(i);
    }
  }
  if (best < 0) {
    result.best = seed;
    result.best_lower = seed_score;
  } else {
    result.best = state.grid[static_cast<std::size_t>(best)];
    result.best_lower = best_lower;
  }
  return result;
}

}  // namespace metacog::sbo
