#pragma once

#include <deque>

#include "metacog/gp/posterior.hpp"
#include "metacog/stl/robustness.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::monitor {

struct FitnessConfig {
  double a = 0.5;         // fitness discount rate, 1/s
  double T = 0.1;         // TD sampling interval, s
  double beta = 0.1;      // surprise threshold
  double delta = 0.5;     // surprise integration window, s
  double varpi = 1.0;     // KL threshold
  double eps = 0.3;       // tracking envelope
  double t_s = 3.0;       // expected settling time, s
  // Saturation substituted for the infinite meta-reward once the margin is
  // lost. Kept commensurate with healthy rewards (2 log(1 + 1/xi) reaches the
  // cap near xi = 9e-5) so violation intervals do not swamp the fitness GP.
  double rm_cap = 20.0;
  gp::TdMode td_mode = gp::TdMode::Discounted;

  void validate() const {
    if (a <= 0 || T <= 0 || beta <= 0 || delta <= 0 || varpi <= 0 || eps <= 0 || t_s <= 0 ||
        rm_cap <= 0)
      throw ConfigError("all fitness config fields must be strictly positive");
  }
};

/// Instantaneous penalty 2 log(1 + 1/xi) for positive margin, saturated at
/// rm_cap once the margin is lost.
double meta_reward(double xi_a, const FitnessConfig& cfg);

/// Discounted integral of the meta-reward over the i-th TD interval
/// [t_{i-1}, t_i] (trapezoid at trajectory resolution).
double integrated_reward(const Trajectory& traj, const stl::PredicateStack& stack,
                         const FitnessConfig& cfg, std::size_t interval_index);

struct FitnessValue {
  double value = 0.0;
  bool truncated = false;  // horizon shorter than ~10/a past t
};

/// Direct quadrature of the fitness integral from t to the trajectory end.
FitnessValue fitness_direct(const Trajectory& traj, const stl::PredicateStack& stack,
                            const FitnessConfig& cfg, double t);

/// TD residual of the fitness GP: mean(q_t) - e^{-aT} mean(q_tT) - R in
/// discounted mode. Queries are joint (state, theta) inputs for the GP.
double surprise(const gp::GpPosterior& gp, const Eigen::VectorXd& query_t,
                const Eigen::VectorXd& query_tT, double integrated_r, const FitnessConfig& cfg);

enum class Decision { NoAction, InferOnly, Adapt };

/// Ring buffer of (t, SP) samples spaced T apart, spanning at least delta.
class SurpriseWindow {
 public:
  explicit SurpriseWindow(const FitnessConfig& cfg) : T_(cfg.T), delta_(cfg.delta) {}

  void push(double t, double sp);
  bool filled() const;
  /// Trapezoidal integral of |SP| over the retained window.
  double integral_abs() const;
  double span() const;

 private:
  double T_;
  double delta_;
  std::deque<std::pair<double, double>> samples_;
};

/// Two-condition metacognitive trigger: surprise integral over the last
/// delta at or above beta, and minimum KL distance to the base library
/// above varpi, mean Adapt; surprise alone means InferOnly.
Decision trigger(const SurpriseWindow& window, const gp::GpPosterior& current_gp,
                 const gp::BaseGpLibrary& bases, const FitnessConfig& cfg,
                 double* min_kl_out = nullptr, double* integral_out = nullptr);

}  // namespace metacog::monitor
