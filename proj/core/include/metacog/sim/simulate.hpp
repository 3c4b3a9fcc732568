#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "metacog/sim/plant.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::sim {

/// Optional mid-run dynamics switch. The plant matrices change at
/// `change_time`; the state carries over unchanged.
struct ScenarioSchedule {
  std::optional<double> change_time;
  std::optional<LtiPlant> changed_plant;

  void validate() const {
    if (change_time.has_value() != changed_plant.has_value())
      throw ConfigError("scenario: change_time and changed plant must be set together");
    if (changed_plant) changed_plant->validate();
  }

  const LtiPlant& active(const LtiPlant& nominal, double t) const {
    if (change_time && t >= *change_time - 1e-12) return *changed_plant;
    return nominal;
  }
};

/// Feedback policy: u = policy(t, x). Inputs are held constant over each
/// integrator step (zero-order hold).
using Policy = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct SimulateConfig {
  double t0 = 0.0;
  double horizon = 10.0;   // seconds simulated past t0
  double dt = 1e-3;        // integrator and sampling step
  double blowup = 1e6;     // |x|_inf above this aborts with an error
};

/// One classical fourth-order Runge-Kutta step of x' = A x + B u with the
/// input held constant over [t, t + dt].
Eigen::VectorXd rk4_step(const LtiPlant& plant, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt);

/// Integrate the closed loop and record every step. The returned
/// trajectory has states[i] at t0 + i*dt and inputs[i] = policy evaluated
/// at that sample (held over the following step); the final input is
/// recorded but never applied.
Trajectory simulate(const LtiPlant& plant, const Policy& policy, const SimulateConfig& cfg,
                    const Eigen::VectorXd& x0, const ScenarioSchedule& schedule = {});

}  // namespace metacog::sim
