#include "metacog/monitor/fitness.hpp"

#include <cmath>
#include <limits>

namespace metacog::monitor {

double meta_reward(double xi_a, const FitnessConfig& cfg) {
  if (!std::isfinite(xi_a)) {
    if (xi_a > 0.0) return 0.0;  // limit of 2 log(1 + 1/xi) as xi -> inf
    throw NumericError("meta_reward: non-finite robustness");
  }
  if (xi_a > 0.0) return 2.0 * std::log1p(1.0 / xi_a);
  return cfg.rm_cap;
}

namespace {

double meta_reward_at(const Trajectory& traj, const stl::PredicateStack& stack,
                      const FitnessConfig& cfg, std::size_t i) {
  const Eigen::VectorXd rho = stl::robustness_vector(stack, traj.states[i], traj.time_of(i));
  return meta_reward(stl::smooth_conjunction(rho), cfg);
}

// Trapezoid of e^{-a (t_j - t_ref)} r_m over sample indices [first, last].
double discounted_trapezoid(const Trajectory& traj, const stl::PredicateStack& stack,
                            const FitnessConfig& cfg, std::size_t first, std::size_t last,
                            double t_ref) {
  double acc = 0.0;
  double prev = std::exp(-cfg.a * (traj.time_of(first) - t_ref)) * meta_reward_at(traj, stack, cfg, first);
  for (std::size_t j = first + 1; j <= last; ++j) {
    const double cur = std::exp(-cfg.a * (traj.time_of(j) - t_ref)) * meta_reward_at(traj, stack, cfg, j);
    acc += 0.5 * (prev + cur) * traj.dt;
    prev = cur;
  }
  return acc;
}

}  // namespace

double integrated_reward(const Trajectory& traj, const stl::PredicateStack& stack,
                         const FitnessConfig& cfg, std::size_t interval_index) {
  cfg.validate();
  traj.validate();
  const auto stride = static_cast<std::size_t>(std::llround(cfg.T / traj.dt));
  if (stride == 0 || std::abs(stride * traj.dt - cfg.T) > 1e-9)
    throw ConfigError("integrated_reward: T must be an integer multiple of trajectory dt");
  if (interval_index == 0) throw EmptyWindowError("integrated_reward: interval index starts at 1");
  const std::size_t first = (interval_index - 1) * stride;
  const std::size_t last = interval_index * stride;
  if (last >= traj.size())
    throw EmptyWindowError("integrated_reward: interval " + std::to_string(interval_index) +
                           " not fully sampled");
  return discounted_trapezoid(traj, stack, cfg, first, last, traj.time_of(first));
}

FitnessValue fitness_direct(const Trajectory& traj, const stl::PredicateStack& stack,
                            const FitnessConfig& cfg, double t) {
  cfg.validate();
  traj.validate();
  const std::size_t first = traj.index_at_or_after(t);
  const std::size_t last = traj.size() - 1;
  if (first > last) throw EmptyWindowError("fitness_direct: t beyond trajectory end");
  FitnessValue out;
  out.value = discounted_trapezoid(traj, stack, cfg, first, last, traj.time_of(first));
  out.truncated = (traj.end_time() - t) < 10.0 / cfg.a;
  return out;
}

double surprise(const gp::GpPosterior& gp, const Eigen::VectorXd& query_t,
                const Eigen::VectorXd& query_tT, double integrated_r, const FitnessConfig& cfg) {
  const double succ = cfg.td_mode == gp::TdMode::Discounted ? std::exp(-cfg.a * cfg.T) : 1.0;
  return gp_predict(gp, query_t).mean - succ * gp_predict(gp, query_tT).mean - integrated_r;
}

void SurpriseWindow::push(double t, double sp) {
  if (!samples_.empty()) {
    const double spacing = t - samples_.back().first;
    if (spacing <= 0.0) throw ConfigError("surprise window timestamps must increase");
    if (std::abs(spacing - T_) > 1e-9)
      throw ConfigError("surprise window spacing must equal the TD interval");
  }
  samples_.emplace_back(t, sp);
  // retain just enough samples to span delta
  while (samples_.size() > 2 && samples_[1].first <= t - delta_) samples_.pop_front();
}

bool SurpriseWindow::filled() const { return span() >= delta_ - 1e-9; }

double SurpriseWindow::span() const {
  return samples_.size() < 2 ? 0.0 : samples_.back().first - samples_.front().first;
}

double SurpriseWindow::integral_abs() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const double dt = samples_[i].first - samples_[i - 1].first;
    acc += 0.5 * (std::abs(samples_[i - 1].second) + std::abs(samples_[i].second)) * dt;
  }
  return acc;
}

Decision trigger(const SurpriseWindow& window, const gp::GpPosterior& current_gp,
                 const gp::BaseGpLibrary& bases, const FitnessConfig& cfg, double* min_kl_out,
                 double* integral_out) {
  cfg.validate();
  if (!window.filled())
    throw EmptyWindowError("trigger: surprise window spans " + std::to_string(window.span()) +
                           " s, needs " + std::to_string(cfg.delta));
  if (bases.entries.empty()) throw ConfigError("trigger: base GP library is empty");

  const double integral = window.integral_abs();
  if (integral_out) *integral_out = integral;
  if (integral < cfg.beta) {
    if (min_kl_out) *min_kl_out = std::numeric_limits<double>::quiet_NaN();
    return Decision::NoAction;
  }

  double min_kl = std::numeric_limits<double>::infinity();
  for (const auto& base : bases.entries) {
    // Compare over the base entry's inducing set: template states are well
    // spread, while trajectory samples may nearly coincide once settled.
    const gp::GpPosterior shifted = gp::shift_inducing(current_gp, base.inducing);
    min_kl = std::min(min_kl, gp::gp_kl(shifted, base));
  }
  if (min_kl_out) *min_kl_out = min_kl;
  return min_kl > cfg.varpi ? Decision::Adapt : Decision::InferOnly;
}

}  // namespace metacog::monitor
