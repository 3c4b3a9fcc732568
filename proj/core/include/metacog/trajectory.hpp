#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "metacog/errors.hpp"

namespace metacog {

/// Uniformly sampled record of one closed-loop run. Sample i lives at
/// t0 + i*dt exactly; states all share one dimension.
struct Trajectory {
  double t0 = 0.0;
  double dt = 1e-3;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // empty when not recorded

  std::size_t size() const { return states.size(); }
  int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  double time_of(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double end_time() const { return states.empty() ? t0 : time_of(states.size() - 1); }

  // Index of the first sample with time >= t (grid lookup, tolerant to fp).
  std::size_t index_at_or_after(double t) const {
    double k = (t - t0) / dt;
    auto i = static_cast<long>(std::ceil(k - 1e-9));
    if (i < 0) i = 0;
    return static_cast<std::size_t>(i);
  }
  // Index of the last sample with time <= t.
  std::size_t index_at_or_before(double t) const {
    double k = (t - t0) / dt;
    auto i = static_cast<long>(std::floor(k + 1e-9));
    if (i < 0) i = 0;
    auto last = static_cast<long>(states.size()) - 1;
    if (i > last) i = last;
    return static_cast<std::size_t>(i);
  }

  void validate() const {
    if (dt <= 0.0) throw DimensionError("trajectory dt must be positive");
    if (states.empty()) throw DimensionError("trajectory must hold at least one sample");
    const auto n = states.front().size();
    for (const auto& x : states) {
      if (x.size() != n) throw DimensionError("trajectory state dimension is not uniform");
      if (!x.allFinite()) throw NumericError("trajectory contains non-finite state");
    }
    if (!inputs.empty() && inputs.size() != states.size())
      throw DimensionError("trajectory inputs length differs from states length");
  }
};

}  // namespace metacog
