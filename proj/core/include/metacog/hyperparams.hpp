#pragma once

#include <Eigen/Dense>

#include "metacog/errors.hpp"

namespace metacog {

/// Metacognitive decision variable: diagonal reward weights Q and R plus
/// the tracking setpoint, with optional non-decision preview coordinates.
struct HyperParams {
  Eigen::VectorXd q_diag;
  Eigen::VectorXd r_diag;
  Eigen::VectorXd setpoint;
  Eigen::VectorXd preview;  // context coordinates, excluded from search

  static constexpr double kQMin = 1e-6;
  static constexpr double kRMin = 1e-6;

  Eigen::Index flat_size() const {
    return q_diag.size() + r_diag.size() + setpoint.size() + preview.size();
  }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(flat_size());
    v << q_diag, r_diag, setpoint, preview;
    return v;
  }

  static HyperParams unflatten(const Eigen::VectorXd& v, Eigen::Index nq, Eigen::Index nr,
                               Eigen::Index ns, Eigen::Index np = 0) {
    if (v.size() != nq + nr + ns + np) throw DimensionError("HyperParams::unflatten size mismatch");
    HyperParams h;
    h.q_diag = v.segment(0, nq);
    h.r_diag = v.segment(nq, nr);
    h.setpoint = v.segment(nq + nr, ns);
    h.preview = v.segment(nq + nr + ns, np);
    return h;
  }

  void validate() const {
    if (q_diag.size() == 0 || r_diag.size() == 0 || setpoint.size() == 0)
      throw ConfigError("hyperparameters need q_diag, r_diag and setpoint");
    if ((q_diag.array() < kQMin).any())
      throw ConfigError("q_diag entries must stay above q_min");
    if ((r_diag.array() < kRMin).any())
      throw ConfigError("r_diag entries must stay above r_min (R must be invertible)");
  }
};

}  // namespace metacog
