#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "metacog/gp/posterior.hpp"
#include "oracles.hpp"

using namespace metacog;

namespace {

gp::Kernel se1(double ls = 1.0, double var = 1.0) {
  return gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, ls), var);
}

Eigen::MatrixXd random_inputs(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
  return X;
}

}  // namespace

TEST_CASE("kernel: symmetry, positivity, PSD gram") {
  std::mt19937_64 rng(3);
  const auto k = gp::Kernel::product(
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(2, 0.7), 1.3, 0),
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, 2.0), 1.0, 2));
  CHECK(k.min_input_dim() == 3);
  const Eigen::MatrixXd X = random_inputs(rng, 20, 3);
  const Eigen::MatrixXd K = k.gram(X);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(K(i, i) > 0.0);
  const Eigen::VectorXd eigs = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
  CHECK(eigs.minCoeff() >= -1e-10 * K.trace());
}

TEST_CASE("kernel: serialization round trip") {
  const auto k = gp::Kernel::product(
      gp::Kernel::squared_exponential((Eigen::VectorXd(2) << 0.5, 1.25).finished(), 2.0, 0),
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, 3.0), 0.5, 2));
  std::stringstream ss;
  k.serialize(ss);
  const auto k2 = gp::Kernel::deserialize(ss);
  Eigen::VectorXd u(3), v(3);
  u << 0.1, -0.4, 2.0;
  v << 1.0, 0.2, -1.0;
  CHECK(k2(u, v) == k(u, v));
}

TEST_CASE("gp_predict: prior, interpolation, variance bound") {
  gp::GpPosterior prior;
  prior.kernel = se1();
  prior.inducing.resize(0, 1);
  prior.alpha.resize(0);
  prior.C.resize(0, 0);
  prior.prior_mean = 0.7;
  const auto p = gp::gp_predict(prior, Eigen::VectorXd::Zero(1));
  CHECK(p.mean == doctest::Approx(0.7));
  CHECK(p.variance == doctest::Approx(1.0));

  // one near-noiseless observation interpolates
  Eigen::MatrixXd X(1, 1);
  X << 0.5;
  Eigen::VectorXd y(1);
  y << 2.0;
  const auto g = gp::fit_direct(se1(), X, y, 1e-12);
  CHECK(gp::gp_predict(g, X.row(0)).mean == doctest::Approx(2.0).epsilon(1e-9));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd q = random_inputs(rng, 1, 1).row(0);
    CHECK(gp::gp_predict(g, q).variance <= g.kernel(q, q) + 1e-9);
  }
}

TEST_CASE("gp_predict: matches dense direct solve on 50-point problems") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd X = random_inputs(rng, 50, 2);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = std::sin(X(i, 0)) + 0.1 * gauss(rng);
    const auto k = gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(2, 0.8), 1.0);
    const double noise = 1e-3;
    const auto g = gp::fit_direct(k, X, y, noise, 0.3);

    const Eigen::MatrixXd K = k.gram(X);
    for (int q = 0; q < 20; ++q) {
      const Eigen::VectorXd query = random_inputs(rng, 1, 2).row(0);
      const Eigen::VectorXd kq = k.covariance_vector(X, query);
      double mean = 0, var = 0;
      oracles::dense_gp_posterior(K, kq, k(query, query), y, noise, 0.3, &mean, &var);
      const auto p = gp::gp_predict(g, query);
      CHECK(p.mean == doctest::Approx(mean).epsilon(1e-8));
      CHECK(p.variance == doctest::Approx(std::max(0.0, var)).epsilon(1e-7));
    }
  }
}

TEST_CASE("gptd_fit: hand-checked 2-point system and TD identity") {
  // L = 2: single reward observes f(x0) - e^{-aT} f(x1)
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::VectorXd r(1);
  r << 0.8;
  const double a = 0.5, T = 0.1, w2 = 1e-8;
  const auto g = gp::gptd_fit(se1(), X, r, w2, a, T);
  const double succ = std::exp(-a * T);
  const double lhs = gp::gp_predict(g, X.row(0)).mean - succ * gp::gp_predict(g, X.row(1)).mean;
  CHECK(lhs == doctest::Approx(0.8).epsilon(1e-6));

  // rewards all zero with zero prior mean: posterior mean 0 at inducing points
  Eigen::MatrixXd X5(5, 1);
  X5 << 0, 1, 2, 3, 4;
  const auto z = gp::gptd_fit(se1(), X5, Eigen::VectorXd::Zero(4), 1e-6, a, T);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(gp::gp_predict(z, X5.row(i)).mean) < 1e-9);

  // TD identity within 3 sqrt(w2): rewards from a smooth value function
  // plus noise at the observation scale
  std::mt19937_64 rng(23);
  Eigen::MatrixXd Xr(12, 1);
  for (int i = 0; i < 12; ++i) Xr(i, 0) = -2.0 + 4.0 * i / 11.0;
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  const auto value = [](double x) { return std::sin(1.3 * x) + 0.3 * x; };
  Eigen::VectorXd rewards(11);
  for (int i = 0; i < 11; ++i)
    rewards[i] = value(Xr(i, 0)) - std::exp(-a * T) * value(Xr(i + 1, 0)) + u(rng);
  const double w2r = 1e-6;
  const auto gr = gp::gptd_fit(se1(), Xr, rewards, w2r, a, T);
  for (int i = 0; i < 11; ++i) {
    const double got =
        gp::gp_predict(gr, Xr.row(i)).mean - succ * gp::gp_predict(gr, Xr.row(i + 1)).mean;
    CHECK(std::abs(got - rewards[i]) <= 3.0 * std::sqrt(w2r));
  }
}

TEST_CASE("gptd_fit: literal mode uses undiscounted rows") {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.7, 1.9;
  Eigen::VectorXd r(2);
  r << 0.5, -0.2;
  const auto g = gp::gptd_fit(se1(), X, r, 1e-8, 0.5, 0.1, gp::TdMode::Literal);
  for (int i = 0; i < 2; ++i) {
    const double got = gp::gp_predict(g, X.row(i)).mean - gp::gp_predict(g, X.row(i + 1)).mean;
    CHECK(got == doctest::Approx(r[i]).epsilon(1e-5));
  }
}

TEST_CASE("gptd_fit: recovers a known exponential fitness from quadrature rewards") {
  // f(x) = e^{-x}; rewards R_i = f(x_i) - e^{-aT} f(x_{i+1}) exactly.
  const double a = 0.5, T = 0.1;
  const double succ = std::exp(-a * T);
  Eigen::MatrixXd X(15, 1);
  for (int i = 0; i < 15; ++i) X(i, 0) = 0.15 * i;
  Eigen::VectorXd r(14);
  for (int i = 0; i < 14; ++i) r[i] = std::exp(-X(i, 0)) - succ * std::exp(-X(i + 1, 0));
  const auto g = gp::gptd_fit(se1(), X, r, 1e-10, a, T);
  // TD observations determine the value only up to the discount null
  // direction h_i = e^{aT i} (H h = 0); compare after removing it.
  Eigen::VectorXd got(15), truth(15), h(15);
  for (int i = 0; i < 15; ++i) {
    truth[i] = std::exp(-X(i, 0));
    got[i] = gp::gp_predict(g, X.row(i)).mean;
    h[i] = std::exp(a * T * i);
  }
  const Eigen::VectorXd diff = got - truth;
  const Eigen::VectorXd residual = diff - (diff.dot(h) / h.squaredNorm()) * h;
  CHECK(residual.norm() / truth.norm() < 0.05);
  // and the raw means still reproduce every TD observation
  const double succ2 = std::exp(-a * T);
  for (int i = 0; i < 14; ++i)
    CHECK(got[i] - succ2 * got[i + 1] == doctest::Approx(r[i]).epsilon(1e-4));
}

TEST_CASE("gp_kl: identity, oracle match, positivity, monotone quadratic") {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd X = random_inputs(rng, 8, 1);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) y[i] = std::sin(X(i, 0));
  const auto g = gp::fit_direct(se1(), X, y, 1e-4);
  CHECK(std::abs(gp::gp_kl(g, g)) < 1e-9);

  // randomized pairs against the dense multivariate-normal oracle:
  // gp_kl(g1,g2) = 2 KL(N(K a2, K + K C2 K) || N(K a1, K + K C1 K))
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd Xi = random_inputs(rng, 6, 1);
    const Eigen::MatrixXd K = se1().gram(Xi);
    auto rand_gp = [&] {
      gp::GpPosterior p;
      p.kernel = se1();
      p.inducing = Xi;
      p.alpha.resize(6);
      for (int i = 0; i < 6; ++i) p.alpha[i] = gauss(rng);
      Eigen::MatrixXd B(6, 6);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) B(i, j) = gauss(rng);
      p.C = B * B.transpose() / 6.0 + 0.05 * Eigen::MatrixXd::Identity(6, 6);
      return p;
    };
    const auto g1 = rand_gp();
    const auto g2 = rand_gp();
    const double got = gp::gp_kl(g1, g2);
    CHECK(got >= -1e-8);
    const Eigen::MatrixXd S1 = K + K * g1.C * K;
    const Eigen::MatrixXd S2 = K + K * g2.C * K;
    const double want = 2.0 * oracles::gaussian_kl(K * g2.alpha, S2, K * g1.alpha, S1);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }

  // alpha distance increases the divergence for fixed C
  auto g1 = g;
  auto g2 = g;
  double prev = 0.0;
  for (double shift : {0.1, 0.2, 0.4, 0.8}) {
    g2.alpha = g1.alpha.array() + shift;
    const double v = gp::gp_kl(g1, g2);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("shift_inducing: identity and subset projection") {
  // well-spread inducing points keep the Gram factorable
  Eigen::MatrixXd X(12, 1);
  for (int i = 0; i < 12; ++i) X(i, 0) = -2.0 + 4.0 * i / 11.0;
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y[i] = std::cos(X(i, 0));
  const auto base = gp::fit_direct(se1(0.9), X, y, 1e-4);

  const auto same = gp::shift_inducing(base, base.inducing);
  CHECK((same.alpha - base.alpha).cwiseAbs().maxCoeff() < 1e-6);

  Eigen::MatrixXd sub(6, 1);
  for (int i = 0; i < 6; ++i) sub.row(i) = X.row(2 * i);
  const auto proj = gp::shift_inducing(base, sub);
  for (int i = 0; i < 6; ++i) {
    const auto want = gp::gp_predict(base, sub.row(i));
    const auto got = gp::gp_predict(proj, sub.row(i));
    CHECK(got.mean == doctest::Approx(want.mean).epsilon(1e-6));
    CHECK(got.variance == doctest::Approx(want.variance).epsilon(1e-4));
  }

  CHECK_THROWS_AS(gp::shift_inducing(base, Eigen::MatrixXd(0, 1)), DimensionError);
  // duplicated targets make the Gram singular
  Eigen::MatrixXd dup(2, 1);
  dup << 0.5, 0.5;
  CHECK_THROWS_AS(gp::shift_inducing(base, dup), NumericError);
}

TEST_CASE("gp serialization: bit-exact round trip") {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXd X = random_inputs(rng, 7, 2);
  Eigen::VectorXd y(7);
  for (int i = 0; i < 7; ++i) y[i] = X(i, 0) - X(i, 1);
  const auto k = gp::Kernel::product(
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, 0.6), 1.1, 0),
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(1, 1.7), 0.9, 1));
  const auto g = gp::fit_direct(k, X, y, 1e-5, 0.25);
  std::stringstream ss;
  gp::serialize(g, ss);
  const auto g2 = gp::deserialize_gp(ss);
  CHECK((g2.inducing - g.inducing).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g2.alpha - g.alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g2.C - g.C).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g2.prior_mean == g.prior_mean);
  const Eigen::VectorXd q = random_inputs(rng, 1, 2).row(0);
  CHECK(gp::gp_predict(g2, q).mean == gp::gp_predict(g, q).mean);
}
