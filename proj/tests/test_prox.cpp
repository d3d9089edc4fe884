#include "hsrc/prox.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hsrc;

TEST_CASE("prox_data scalar case") {
  Eigen::VectorXd v(1), p(1);
  v << 0.0;
  p << 1.0;
  const Eigen::VectorXd z = prox_data(v, p, 1.0);
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-15));
  // -ln z + z^2/2 is minimized at z = 1.
  const double s = oracle::golden_section([](double x) { return -std::log(x) + 0.5 * x * x; },
                                          1e-6, 5.0);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("prox_data satisfies its stationarity identity") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> mus(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 8;
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v[j] = normal(rng);
    const Eigen::VectorXd p = oracle::random_probabilities(k, 1, rng).col(0);
    const double mu = mus(rng);
    const Eigen::VectorXd z = prox_data(v, p, mu);
    const Eigen::VectorXd residual = mu * (z - v) - p / p.dot(z);
    CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("prox_data matches a golden-section search along p") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = 4;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v[j] = normal(rng);
    const Eigen::VectorXd p = oracle::random_probabilities(k, 1, rng).col(0);
    const double mu = 1.5;
    // The minimizer has the form v + c p with c = 1 / (mu t) > 0. Along that
    // ray the objective's derivative vanishes where c (p^T v + c |p|^2) = 1/mu;
    // the left side increases in c, so |residual| is unimodal with a sharp
    // minimum that golden section locates to machine precision.
    auto f = [&](double c) {
      return std::abs(c * (p.dot(v) + c * p.squaredNorm()) - 1.0 / mu);
    };
    const double lo = std::max(0.0, -p.dot(v) / p.squaredNorm());
    const double hi = lo + 2.0 / (p.norm() * std::sqrt(mu));
    const double c = oracle::golden_section(f, lo, hi, 1e-15);
    const Eigen::VectorXd expected = v + c * p;
    CHECK((prox_data(v, p, mu) - expected).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("prox_data root avoids cancellation for negative p^T v") {
  const double pv = -1e8, p2 = 1.0, mu = 1.0;
  const double t = prox_data_root(pv, p2, mu);
  CHECK(t > 0.0);
  CHECK(mu * t * t - mu * pv * t - p2 == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("project_simplex leaves simplex points unchanged") {
  Eigen::VectorXd v(4);
  v << 0.1, 0.2, 0.3, 0.4;
  CHECK((project_simplex(v) - v).norm() <= 1e-15);
}

TEST_CASE("project_simplex maps a dominant coordinate to a vertex") {
  Eigen::VectorXd v(3);
  v << 10.0, 0.0, 0.0;
  const Eigen::VectorXd z = project_simplex(v);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);
  CHECK(z[2] == 0.0);
}

TEST_CASE("project_simplex matches support enumeration") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd v(5);
    for (int j = 0; j < 5; ++j) v[j] = normal(rng);
    const Eigen::VectorXd z = project_simplex(v);
    CHECK((z - oracle::simplex_by_enumeration(v)).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(z.minCoeff() >= 0.0);
    CHECK(z.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("project_simplex rejects bad input") {
  Eigen::VectorXd v(2);
  v << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS(project_simplex(v));
  CHECK_THROWS(project_simplex(Eigen::VectorXd()));
}

TEST_CASE("group soft threshold") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK(group_soft_threshold(zero, 0.5).norm() == 0.0);

  Eigen::VectorXd a(4);
  a << 3.0, 0.0, 4.0, 0.0;  // |a| = 5
  const Eigen::VectorXd half = group_soft_threshold(a, 2.5);
  CHECK((half - a / 2).norm() <= 1e-15);
  CHECK(group_soft_threshold(a, 5.0).norm() == 0.0);
  CHECK(group_soft_threshold(a, 7.0).norm() == 0.0);
}

TEST_CASE("group soft threshold matches a numeric proximal search") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> thr(0.01, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd a(6);
    for (int j = 0; j < 6; ++j) a[j] = normal(rng);
    const double t = thr(rng);
    const Eigen::VectorXd x = group_soft_threshold(a, t);
    CHECK((x - oracle::group_prox_numeric(a, t)).lpNorm<Eigen::Infinity>() <= 1e-6);
    // No random perturbation improves the prox objective.
    auto obj = [&](const Eigen::VectorXd& y) { return t * y.norm() + 0.5 * (y - a).squaredNorm(); };
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd e(6);
      for (int m = 0; m < 6; ++m) e[m] = 1e-4 * normal(rng);
      CHECK(obj(x + e) >= obj(x) - 1e-15);
    }
  }
}
