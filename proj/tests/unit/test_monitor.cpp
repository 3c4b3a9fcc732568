#include <cmath>
#include <random>

#include "doctest.h"
#include "metacog/monitor/fitness.hpp"

using namespace metacog;

namespace {

stl::PredicateStack unit_stack(double eps = 0.3) {
  stl::PredicateStack stack;
  stack.eps = eps;
  stack.setpoint = Eigen::VectorXd::Zero(1);
  return stack;
}

// Signal pinned so the smooth margin is constant: a single liveness
// predicate with |x| fixed gives xi = eps - |x|.
Trajectory pinned_trajectory(double offset, int samples, double dt) {
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  for (int i = 0; i < samples; ++i) traj.states.push_back(Eigen::VectorXd::Constant(1, offset));
  return traj;
}

gp::Kernel se1() {
  return gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, 1.0), 1.0);
}

}  // namespace

TEST_CASE("meta_reward: analytic values, saturation, monotonicity") {
  monitor::FitnessConfig cfg;
  CHECK(monitor::meta_reward(1.0, cfg) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(monitor::meta_reward(-0.5, cfg) == cfg.rm_cap);
  CHECK(monitor::meta_reward(0.0, cfg) == cfg.rm_cap);
  CHECK(monitor::meta_reward(std::numeric_limits<double>::infinity(), cfg) == 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double xi : {0.01, 0.1, 1.0, 10.0, 1000.0}) {
    const double v = monitor::meta_reward(xi, cfg);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("integrated_reward: constant meta-reward closed form") {
  monitor::FitnessConfig cfg;
  const auto traj = pinned_trajectory(0.1, 1001, 1e-3);  // xi = 0.2 throughout
  const auto stack = unit_stack();
  const double xi = 0.3 - 0.1;
  const double rm = monitor::meta_reward(xi, cfg);
  const double want = rm * (1.0 - std::exp(-cfg.a * cfg.T)) / cfg.a;
  for (std::size_t i = 1; i <= 10; ++i) {
    const double got = monitor::integrated_reward(traj, stack, cfg, i);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
    CHECK(got >= 0.0);
  }
  CHECK_THROWS_AS(monitor::integrated_reward(traj, stack, cfg, 11), EmptyWindowError);
  CHECK_THROWS_AS(monitor::integrated_reward(traj, stack, cfg, 0), EmptyWindowError);
}

TEST_CASE("fitness_direct: Theorem-1 style bound and Bellman self-consistency") {
  monitor::FitnessConfig cfg;
  const auto stack = unit_stack();
  const auto traj = pinned_trajectory(0.05, 40001, 1e-3);  // 40 s > 10/a, xi = 0.25
  const auto f0 = monitor::fitness_direct(traj, stack, cfg, 0.0);
  CHECK_FALSE(f0.truncated);
  const double bound = (2.0 / cfg.a) * std::log(1.0 + 1.0 / 0.25);
  // trapezoid quadrature can overshoot the continuous-time bound slightly
  CHECK(f0.value <= bound * (1.0 + 1e-4));
  CHECK(f0.value >= 0.0);

  // f(t) = int_t^{t+T} + e^{-aT} f(t+T)
  for (double t : {0.0, 1.0, 2.5}) {
    const double ft = monitor::fitness_direct(traj, stack, cfg, t).value;
    const double ftT = monitor::fitness_direct(traj, stack, cfg, t + cfg.T).value;
    const auto idx = static_cast<std::size_t>(std::llround(t / cfg.T));
    const double seg = monitor::integrated_reward(traj, stack, cfg, idx + 1);
    CHECK(std::abs(ft - seg - std::exp(-cfg.a * cfg.T) * ftT) <= 1e-6 * (1.0 + ft));
  }

  // short horizon is flagged truncated
  const auto short_traj = pinned_trajectory(0.05, 2001, 1e-3);
  CHECK(monitor::fitness_direct(short_traj, stack, cfg, 0.0).truncated);
}

TEST_CASE("fitness_direct: violation barrier dominates") {
  monitor::FitnessConfig cfg;
  const auto stack = unit_stack();
  auto traj = pinned_trajectory(0.05, 5001, 1e-3);
  traj.states[100] = Eigen::VectorXd::Constant(1, 2.0);  // outside the envelope
  const double f = monitor::fitness_direct(traj, stack, cfg, 0.0).value;
  CHECK(f >= cfg.rm_cap * std::exp(-cfg.a * 0.1) * 1e-3);
}

TEST_CASE("surprise: TD identity and linearity in R") {
  monitor::FitnessConfig cfg;
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::VectorXd r(1);
  r << 0.4;
  const auto g = gp::gptd_fit(se1(), X, r, 1e-10, cfg.a, cfg.T);
  const double sp = monitor::surprise(g, X.row(0), X.row(1), 0.4, cfg);
  CHECK(std::abs(sp) < 1e-6);
  const double sp_c = monitor::surprise(g, X.row(0), X.row(1), 0.4 + 0.123, cfg);
  CHECK(sp_c == doctest::Approx(sp - 0.123));
}

TEST_CASE("surprise window: spacing, span, trapezoid") {
  monitor::FitnessConfig cfg;  // T = 0.1, delta = 0.5
  monitor::SurpriseWindow w(cfg);
  CHECK_FALSE(w.filled());
  for (int i = 0; i <= 5; ++i) w.push(i * cfg.T, 1.0);
  CHECK(w.filled());
  CHECK(w.integral_abs() == doctest::Approx(0.5));
  CHECK_THROWS_AS(w.push(0.65, 0.0), ConfigError);  // wrong spacing
  monitor::SurpriseWindow w2(cfg);
  w2.push(0.0, 0.0);
  CHECK_THROWS_AS(w2.push(0.0, 0.0), ConfigError);  // non-increasing
}

TEST_CASE("trigger: three-way decision table") {
  monitor::FitnessConfig cfg;
  Eigen::MatrixXd X(6, 1);
  X << 0, 1, 2, 3, 4, 5;
  Eigen::VectorXd r = Eigen::VectorXd::Constant(5, 0.3);
  const auto base = gp::gptd_fit(se1(), X, r, 1e-6, cfg.a, cfg.T);
  gp::BaseGpLibrary lib;
  lib.entries.push_back(base);

  monitor::SurpriseWindow quiet(cfg);
  for (int i = 0; i <= 5; ++i) quiet.push(i * cfg.T, 0.0);
  double min_kl = 0, integral = 0;
  CHECK(monitor::trigger(quiet, base, lib, cfg, &min_kl, &integral) ==
        monitor::Decision::NoAction);
  CHECK(integral == 0.0);
  CHECK(std::isnan(min_kl));

  monitor::SurpriseWindow loud(cfg);
  for (int i = 0; i <= 5; ++i) loud.push(i * cfg.T, 2.0 * cfg.beta / cfg.delta);
  // current equal to a base entry: KL = 0, second condition fails
  CHECK(monitor::trigger(loud, base, lib, cfg, &min_kl, &integral) ==
        monitor::Decision::InferOnly);
  CHECK(integral == doctest::Approx(2.0 * cfg.beta));
  CHECK(min_kl == doctest::Approx(0.0).epsilon(1e-6));

  // a wildly different current GP: KL above varpi in both directions
  auto far = base;
  far.alpha = base.alpha.array() + 50.0;
  CHECK(monitor::trigger(loud, far, lib, cfg, &min_kl, &integral) == monitor::Decision::Adapt);
  CHECK(min_kl > cfg.varpi);

  monitor::SurpriseWindow under(cfg);
  under.push(0.0, 1.0);
  CHECK_THROWS_AS(monitor::trigger(under, base, lib, cfg), EmptyWindowError);
}

TEST_CASE("trigger: monotone in surprise magnitude") {
  monitor::FitnessConfig cfg;
  Eigen::MatrixXd X(6, 1);
  X << 0, 1, 2, 3, 4, 5;
  const auto base = gp::gptd_fit(se1(), X, Eigen::VectorXd::Constant(5, 0.3), 1e-6, cfg.a, cfg.T);
  gp::BaseGpLibrary lib;
  lib.entries.push_back(base);
  auto far = base;
  far.alpha = base.alpha.array() + 50.0;

  bool seen_adapt = false;
  for (double level : {0.0, 0.1, 0.3, 1.0, 3.0}) {
    monitor::SurpriseWindow w(cfg);
    for (int i = 0; i <= 5; ++i) w.push(i * cfg.T, level);
    const auto d = monitor::trigger(w, far, lib, cfg);
    if (seen_adapt) CHECK(d == monitor::Decision::Adapt);  // never flips back
    if (d == monitor::Decision::Adapt) seen_adapt = true;
  }
  CHECK(seen_adapt);
}
