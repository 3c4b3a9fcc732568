#include "metacog/sim/simulate.hpp"

#include <cmath>

namespace metacog::sim {

Eigen::VectorXd rk4_step(const LtiPlant& plant, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt) {
  const Eigen::VectorXd bu = plant.B * u;
  const Eigen::VectorXd k1 = plant.A * x + bu;
  const Eigen::VectorXd k2 = plant.A * (x + 0.5 * dt * k1) + bu;
  const Eigen::VectorXd k3 = plant.A * (x + 0.5 * dt * k2) + bu;
  const Eigen::VectorXd k4 = plant.A * (x + dt * k3) + bu;
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory simulate(const LtiPlant& plant, const Policy& policy, const SimulateConfig& cfg,
                    const Eigen::VectorXd& x0, const ScenarioSchedule& schedule) {
  plant.validate();
  schedule.validate();
  if (cfg.dt <= 0.0) throw ConfigError("simulate: dt must be positive");
  if (cfg.horizon <= 0.0) throw ConfigError("simulate: horizon must be positive");
  if (x0.size() != plant.state_dim()) throw DimensionError("simulate: x0 dimension mismatch");

  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * cfg.dt - cfg.horizon) > 1e-9)
    throw ConfigError("simulate: horizon must be an integer multiple of dt");

  Trajectory traj;
  traj.t0 = cfg.t0;
  traj.dt = cfg.dt;
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);

  Eigen::VectorXd x = x0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = cfg.t0 + static_cast<double>(i) * cfg.dt;
    if (x.cwiseAbs().maxCoeff() > cfg.blowup || !x.allFinite())
      throw NumericError("simulate: state blew up at t = " + std::to_string(t));
    const Eigen::VectorXd u = policy(t, x);
    if (u.size() != plant.input_dim()) throw DimensionError("simulate: policy output dimension mismatch");
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    if (i < steps) x = rk4_step(schedule.active(plant, t), x, u, cfg.dt);
  }
  return traj;
}

}  // namespace metacog::sim
