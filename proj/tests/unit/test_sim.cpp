#include <cmath>

#include "doctest.h"
#include "metacog/sim/plant.hpp"
#include "metacog/sim/simulate.hpp"

using namespace metacog;

TEST_CASE("rk4: scalar decay matches the exponential") {
  sim::LtiPlant p;
  p.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  p.B = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(1);
  for (int i = 0; i < 1000; ++i) x = sim::rk4_step(p, x, u, 1e-3);
  CHECK(std::abs(x[0] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("rk4: forced response of an integrator") {
  sim::LtiPlant p;  // x' = u
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.B = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  for (int i = 0; i < 500; ++i) x = sim::rk4_step(p, x, Eigen::VectorXd::Constant(1, 2.0), 1e-3);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simulate: sampling grid, recorded inputs, blow-up guard") {
  sim::LtiPlant p;
  p.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  p.B = Eigen::MatrixXd::Identity(1, 1);
  sim::SimulateConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 1e-3;
  const sim::Policy policy = [](double t, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(1, t);
  };
  const auto traj = sim::simulate(p, policy, cfg, Eigen::VectorXd::Zero(1));
  CHECK(traj.states.size() == 1001);
  CHECK(traj.inputs.size() == traj.states.size());
  CHECK(traj.inputs[500][0] == doctest::Approx(0.5));
  CHECK(traj.dt == cfg.dt);

  sim::LtiPlant unstable;
  unstable.A = Eigen::MatrixXd::Constant(1, 1, 10.0);
  unstable.B = Eigen::MatrixXd::Zero(1, 1);
  sim::SimulateConfig tight = cfg;
  tight.blowup = 100.0;
  CHECK_THROWS_AS(sim::simulate(unstable, policy, tight, Eigen::VectorXd::Constant(1, 1.0)),
                  NumericError);

  sim::SimulateConfig ragged = cfg;
  ragged.horizon = 0.0105;  // not an integer multiple of dt... but 10.5 steps
  CHECK_THROWS_AS(sim::simulate(p, policy, ragged, Eigen::VectorXd::Zero(1)), ConfigError);
}

TEST_CASE("scenario schedule: dynamics switch carries the state over") {
  sim::LtiPlant decay;
  decay.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  decay.B = Eigen::MatrixXd::Zero(1, 1);
  sim::LtiPlant freeze;  // x' = 0
  freeze.A = Eigen::MatrixXd::Zero(1, 1);
  freeze.B = Eigen::MatrixXd::Zero(1, 1);

  sim::ScenarioSchedule sched;
  sched.change_time = 0.5;
  sched.changed_plant = freeze;
  sched.validate();

  sim::SimulateConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 1e-3;
  const sim::Policy zero = [](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
  const auto traj = sim::simulate(decay, zero, cfg, Eigen::VectorXd::Constant(1, 1.0), sched);
  // decays until 0.5 s, constant afterwards
  CHECK(traj.states[500][0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(traj.states[1000][0] == traj.states[500][0]);

  sim::ScenarioSchedule half;
  half.change_time = 0.5;
  CHECK_THROWS_AS(half.validate(), ConfigError);
}

TEST_CASE("vehicle model: matrix entries from the physical parameters") {
  sim::VehicleParams p;
  const auto plant = sim::vehicle_matrices(p);
  REQUIRE(plant.A.rows() == 4);
  REQUIRE(plant.B.cols() == 1);

  const double v = p.v_T, m = p.m_T, I = p.I_T, kf = p.k_f, kr = p.k_r, a = p.a, b = p.b;
  CHECK(plant.A(0, 1) == v);
  CHECK(plant.A(0, 2) == v);
  CHECK(plant.A(1, 3) == 1.0);
  CHECK(plant.A(2, 2) == doctest::Approx(-(kf + kr) / (m * v)));
  CHECK(plant.A(2, 3) == doctest::Approx(-(m * v + (a * kf - b * kr) / v) / (m * v)));
  CHECK(plant.A(3, 2) == doctest::Approx(-(a * kf - b * kr) / I));
  CHECK(plant.A(3, 3) == doctest::Approx(-(a * a * kf + b * b * kr) / (I * v)));
  CHECK(plant.B(2, 0) == doctest::Approx(kf / (m * v)));
  CHECK(plant.B(3, 0) == doctest::Approx(a * kf / I));
  // rows 0 and 1 are pure kinematics
  CHECK(plant.A.row(0).head(1).isZero());
  CHECK(plant.B.topRows(2).isZero());
}

TEST_CASE("vehicle model: speed perturbation structure") {
  sim::VehicleParams p;
  const double dv = 8.0;
  const auto nominal = sim::vehicle_matrices(p);
  const auto changed = sim::perturbed_matrices(p, dv);
  const Eigen::MatrixXd dA = changed.A - nominal.A;
  const Eigen::MatrixXd dB = changed.B - nominal.B;

  const double m = p.m_T, I = p.I_T, kf = p.k_f, kr = p.k_r, a = p.a, b = p.b;
  CHECK(dA.row(1).isZero());          // heading kinematics unchanged
  CHECK(dA(3, 2) == 0.0);             // yaw/slip coupling unchanged
  CHECK(dA(0, 1) == doctest::Approx(dv));
  CHECK(dA(0, 2) == doctest::Approx(dv));
  CHECK(dA(2, 2) == doctest::Approx(-(kf + kr) / (m * dv)));
  CHECK(dA(2, 3) == doctest::Approx(-(m * dv + (a * kf - b * kr) / dv) / (m * dv)));
  CHECK(dA(3, 3) == doctest::Approx(-(a * a * kf + b * b * kr) / (I * dv)));
  CHECK(dB(2, 0) == doctest::Approx(kf / (m * dv)));
  CHECK(dB(3, 0) == 0.0);

  CHECK_THROWS_AS(sim::perturbed_matrices(p, 0.0), ConfigError);
  sim::VehicleParams bad;
  bad.m_T = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
