#include "hsrc/vtv.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hsrc;

TEST_CASE("vtv of a constant field is zero") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Constant(3, 20, 0.25);
  CHECK(vtv_norm(gradient(z, {4, 5})) == 0.0);
}

TEST_CASE("a horizontal step edge costs twice its length with cyclic wrap") {
  // 6 rows x 5 columns, top half 0, bottom half h: the vertical differences
  // are nonzero on the edge row and again where the last row wraps to the first.
  const ImageDims dims{6, 5};
  const double h = 1.75;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 30);
  for (int r = 3; r < 6; ++r)
    for (int c = 0; c < 5; ++c) z(0, static_cast<Eigen::Index>(dims.index(r, c))) = h;
  CHECK(vtv_norm(gradient(z, dims)) == doctest::Approx(2 * 5 * h));

  // Transposed: a vertical edge spans the 6 rows.
  Eigen::MatrixXd zt = Eigen::MatrixXd::Zero(1, 30);
  for (int r = 0; r < 6; ++r)
    for (int c = 2; c < 5; ++c) zt(0, static_cast<Eigen::Index>(dims.index(r, c))) = -h;
  CHECK(vtv_norm(gradient(zt, dims)) == doctest::Approx(2 * 6 * h));
}

TEST_CASE("vtv matches direct elementwise recomputation") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(2, 16);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  CHECK(vtv_norm(gradient(z, {4, 4})) == doctest::Approx(oracle::vtv_direct(z, 4, 4)).epsilon(1e-14));
}

TEST_CASE("gradient adjoint satisfies <Dz, g> = <z, D^T g>") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  const ImageDims dims{5, 7};
  Eigen::MatrixXd z(3, 35);
  GradientField g{Eigen::MatrixXd(3, 35), Eigen::MatrixXd(3, 35)};
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z.data()[i] = normal(rng);
    g.horizontal.data()[i] = normal(rng);
    g.vertical.data()[i] = normal(rng);
  }
  const GradientField dz = gradient(z, dims);
  const double lhs = (dz.horizontal.array() * g.horizontal.array()).sum() +
                     (dz.vertical.array() * g.vertical.array()).sum();
  const double rhs = (z.array() * gradient_adjoint(g, dims).array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("prox_vtv shrinks each pixel's joint vector") {
  GradientField g{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  // Pixel 0: joint vector (3, 0, 0, 4), norm 5. Pixel 1: zero.
  g.horizontal(0, 0) = 3.0;
  g.vertical(1, 0) = 4.0;
  const GradientField out = prox_vtv(g, 2.5);
  CHECK(out.horizontal(0, 0) == doctest::Approx(1.5));
  CHECK(out.vertical(1, 0) == doctest::Approx(2.0));
  CHECK(out.horizontal.col(1).norm() == 0.0);
  CHECK(prox_vtv(g, 10.0).vertical.norm() == 0.0);
}

TEST_CASE("prox_vtv matches the numeric proximal oracle per pixel") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = 3;
  GradientField g{Eigen::MatrixXd(k, 12), Eigen::MatrixXd(k, 12)};
  for (Eigen::Index i = 0; i < g.horizontal.size(); ++i) {
    g.horizontal.data()[i] = normal(rng);
    g.vertical.data()[i] = normal(rng);
  }
  const double t = 0.8;
  const GradientField out = prox_vtv(g, t);
  for (Eigen::Index i = 0; i < 12; ++i) {
    Eigen::VectorXd a(2 * k);
    a << g.horizontal.col(i), g.vertical.col(i);
    Eigen::VectorXd got(2 * k);
    got << out.horizontal.col(i), out.vertical.col(i);
    CHECK((got - oracle::group_prox_numeric(a, t)).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}
