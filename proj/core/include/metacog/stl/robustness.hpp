#pragma once

#include <Eigen/Dense>
#include <optional>

#include "metacog/stl/ast.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::stl {

/// Spatial robustness of a formula over a sampled trajectory at time t.
/// inf/sup over temporal windows become min/max over the sample grid;
/// windows extending past the trajectory end are truncated, and an empty
/// window after truncation raises EmptyWindowError.
double robustness(const Formula& f, const Trajectory& traj, double t);

/// Qualitative satisfaction: robustness > 0.
bool satisfies(const Formula& f, const Trajectory& traj, double t);

/// Stack of safety predicates plus the tracking-liveness predicate
/// eps - ||x - setpoint||. Safety predicates are evaluated over the
/// concatenated vector [x; r] so they may reference the active reference
/// (components R1..Rn after the state components x1..xn).
///
/// An optional reference switch models a commanded maneuver: before
/// `setpoint_time` the tracked reference is `setpoint_before` (zero when
/// empty), after it the commanded `setpoint`.
struct PredicateStack {
  std::vector<Predicate> safety;
  double eps = 0.0;
  Eigen::VectorXd setpoint;
  std::optional<double> setpoint_time;
  Eigen::VectorXd setpoint_before;

  Eigen::VectorXd setpoint_at(double t) const {
    if (setpoint_time && t < *setpoint_time - 1e-12)
      return setpoint_before.size() ? setpoint_before
                                    : Eigen::VectorXd::Zero(setpoint.size()).eval();
    return setpoint;
  }

  void validate() const {
    if (eps <= 0.0) throw ConfigError("tracking envelope eps must be positive");
    if (setpoint.size() == 0) throw ConfigError("predicate stack needs a setpoint");
    if (setpoint_before.size() && setpoint_before.size() != setpoint.size())
      throw ConfigError("pre-switch setpoint dimension must match the setpoint");
  }
};

/// Component i (i < N) is safety predicate i evaluated at [x; r]; the last
/// component is the liveness margin eps - ||x - r|| with r the commanded
/// setpoint (time-free overload) or the reference active at time t.
Eigen::VectorXd robustness_vector(const PredicateStack& stack, const Eigen::VectorXd& x);
Eigen::VectorXd robustness_vector(const PredicateStack& stack, const Eigen::VectorXd& x, double t);

/// Smooth conjunction -log(sum_i exp(-rho_i)); always <= min_i rho_i,
/// with gap at most log(len(rhos)). Shift-guarded against overflow.
double smooth_conjunction(const Eigen::VectorXd& rhos);

}  // namespace metacog::stl
