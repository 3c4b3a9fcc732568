#include "metacog/sim/plant.hpp"

namespace metacog::sim {

LtiPlant vehicle_matrices(const VehicleParams& p) {
  p.validate();
  LtiPlant plant;
  plant.A = Eigen::MatrixXd::Zero(4, 4);
  plant.B = Eigen::MatrixXd::Zero(4, 1);
  const double m = p.m_T, I = p.I_T, v = p.v_T, kf = p.k_f, kr = p.k_r, a = p.a, b = p.b;

  plant.A(0, 1) = v;
  plant.A(0, 2) = v;
  plant.A(1, 3) = 1.0;
  plant.A(2, 2) = -(kf + kr) / (m * v);
  plant.A(2, 3) = -(m * v + (a * kf - b * kr) / v) / (m * v);
  plant.A(3, 2) = -(a * kf - b * kr) / I;
  plant.A(3, 3) = -(a * a * kf + b * b * kr) / (I * v);

  plant.B(2, 0) = kf / (m * v);
  plant.B(3, 0) = a * kf / I;
  plant.label = "vehicle";
  plant.validate();
  return plant;
}

LtiPlant perturbed_matrices(const VehicleParams& p, double dv) {
  p.validate();
  if (dv == 0.0) throw ConfigError("perturbed_matrices: dv must be nonzero");
  LtiPlant delta;
  delta.A = Eigen::MatrixXd::Zero(4, 4);
  delta.B = Eigen::MatrixXd::Zero(4, 1);
  const double m = p.m_T, I = p.I_T, kf = p.k_f, kr = p.k_r, a = p.a, b = p.b;

  delta.A(0, 1) = dv;
  delta.A(0, 2) = dv;
  delta.A(2, 2) = -(kf + kr) / (m * dv);
  delta.A(2, 3) = -(m * dv + (a * kf - b * kr) / dv) / (m * dv);
  delta.A(3, 3) = -(a * a * kf + b * b * kr) / (I * dv);

  delta.B(2, 0) = kf / (m * dv);

  const LtiPlant nominal = vehicle_matrices(p);
  LtiPlant out;
  out.A = nominal.A + delta.A;
  out.B = nominal.B + delta.B;
  out.label = "vehicle+dv=" + std::to_string(dv);
  out.validate();
  return out;
}

}  // namespace metacog::sim
