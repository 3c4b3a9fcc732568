#pragma once

#include <Eigen/Dense>
#include <string>

#include "metacog/errors.hpp"

namespace metacog::sim {

struct LtiPlant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::string label;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }

  void validate() const {
    if (A.rows() != A.cols()) throw DimensionError("plant A must be square");
    if (B.rows() != A.rows()) throw DimensionError("plant B row count must match A");
    if (!A.allFinite() || !B.allFinite()) throw NumericError("plant matrices must be finite");
  }
};

/// Lateral dynamics parameters of the lane-change vehicle.
struct VehicleParams {
  double m_T = 1300.0;    // kg
  double I_T = 10000.0;   // kg m^2
  double v_T = 16.0;      // m/s
  double k_f = 91000.0;   // N/rad
  double k_r = 91000.0;   // N/rad
  double a = 1.6154;      // m
  double b = 1.8846;      // m

  void validate() const {
    if (m_T <= 0 || I_T <= 0 || v_T <= 0 || k_f <= 0 || k_r <= 0 || a <= 0 || b <= 0)
      throw ConfigError("vehicle parameters must be strictly positive");
  }
};

/// Steering-control model with state [y, psi, alpha, psi_dot], input delta.
LtiPlant vehicle_matrices(const VehicleParams& p);

/// Additive perturbation of the vehicle model parameterized by the
/// longitudinal-speed change dv; dv = 0 is rejected (division by dv).
LtiPlant perturbed_matrices(const VehicleParams& p, double dv);

}  // namespace metacog::sim
