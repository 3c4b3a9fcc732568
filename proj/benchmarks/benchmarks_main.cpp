// Microbenchmarks for the hot paths: robustness evaluation, GP prediction
// and one policy-evaluation least-squares step.

#include <benchmark/benchmark.h>

#include <random>

#include "metacog/gp/posterior.hpp"
#include "metacog/rl/policy_iteration.hpp"
#include "metacog/sim/plant.hpp"
#include "metacog/stl/ast.hpp"
#include "metacog/stl/robustness.hpp"

namespace {

using namespace metacog;

Trajectory sine_trajectory(int dim, int samples) {
  Trajectory traj;
  traj.dt = 1e-3;
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = std::sin(0.7 * (k + 1) * i * traj.dt) + 0.2 * k;
    traj.states.push_back(x);
  }
  return traj;
}

void bm_robustness(benchmark::State& state) {
  const auto f = stl::parse_formula("G[0,1](1 - abs(x1 - 1) > 0) & F[0,2](x2 > 0)",
                                    {"x1", "x2"});
  const Trajectory traj = sine_trajectory(2, 5000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stl::robustness(*f, traj, 0.5));
  }
}
BENCHMARK(bm_robustness);

void bm_gp_predict(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto kernel = gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(4, 0.9), 1.0);
  Eigen::MatrixXd X(120, 4);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) X(i, j) = gauss(rng);
    y[i] = std::sin(X(i, 0)) + 0.1 * gauss(rng);
  }
  const auto fitted = gp::fit_direct(kernel, X, y, 1e-4);
  Eigen::VectorXd q(4);
  q << 0.1, -0.3, 0.5, 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp::gp_predict(fitted, q));
  }
}
BENCHMARK(bm_gp_predict);

void bm_policy_iteration_step(benchmark::State& state) {
  sim::LtiPlant plant = sim::vehicle_matrices(sim::VehicleParams{});
  HyperParams theta;
  theta.q_diag = Eigen::VectorXd::Constant(4, 10.0);
  theta.r_diag = Eigen::VectorXd::Constant(1, 2.0);
  theta.setpoint = (Eigen::VectorXd(4) << 1.0, 0.0, 0.0, 0.0).finished();
  const auto noise = rl::make_exploration_noise(3, 1, 4, 0.1);
  const rl::BehaviorPolicy idle = [](double, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(1);
  };
  rl::DataLog log =
      rl::collect_data(plant, idle, noise, theta, 60, 0.1, 1e-3, Eigen::VectorXd::Zero(4));
  log.gamma = 0.1;
  const Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(8, 1);
  Eigen::MatrixXd Theta_k;
  Eigen::VectorXd Xi_k;
  rl::build_regressors(log, theta, w0, Theta_k, Xi_k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rl::policy_iteration_step(Theta_k, Xi_k, 8, 1));
  }
}
BENCHMARK(bm_policy_iteration_step);

}  // namespace

BENCHMARK_MAIN();
