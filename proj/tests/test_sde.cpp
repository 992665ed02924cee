#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pvi/sde.hpp"

using namespace pvi;

namespace {
Vector vec1(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}
}  // namespace

TEST_CASE("time grid validation and nodes") {
  TimeGrid g(0.25, 1.0, 3);
  CHECK(g.h() == doctest::Approx(0.25));
  CHECK(g.node(0) == 0.25);
  CHECK(g.node(3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 4), ConfigError);
  CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), ConfigError);
}

TEST_CASE("constant drift, zero noise: paths end at x + c(T-t)") {
  auto coeffs = CoefficientField::make(2)
                    .drift_constant((Vector(2) << 1.5, -0.5).finished())
                    .sigma_zero();
  const Vector x0 = Vector::Zero(2);
  const auto ens = simulate(coeffs, {0.0, x0}, TimeGrid(0.0, 1.0, 64), 3, 7);
  for (int p = 0; p < 3; ++p) {
    CHECK(ens.states_at(64)(p, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(ens.states_at(64)(p, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(ens.states_at(0)(p, 0) == 0.0);
  }
}

TEST_CASE("brownian motion statistics at 4 sigma") {
  auto coeffs = CoefficientField::make(1).drift_zero().sigma_constant(Matrix::Identity(1, 1));
  const int n_paths = 10000;
  const auto ens = simulate(coeffs, {0.0, vec1(5.0)}, TimeGrid(0.0, 1.0, 20), n_paths, 42);

  const double mean = ens.states_at(20).col(0).mean();
  CHECK(std::abs(mean - 5.0) < 4.0 / std::sqrt(static_cast<double>(n_paths)));

  // per-step increments: mean → 0, variance → h at 4 sigma
  const double h = ens.grid.h();
  for (int i : {0, 7, 19}) {
    const auto dw = ens.increments_at(i).col(0);
    const double m = dw.mean();
    const double var = dw.squaredNorm() / n_paths - m * m;
    CHECK(std::abs(m) < 4.0 * std::sqrt(h / n_paths));
    CHECK(std::abs(var - h) < 4.0 * h * std::sqrt(2.0 / n_paths));
  }

  // terminal variance matches N(x, T-t)
  const auto xT = ens.states_at(20).col(0);
  const double mT = xT.mean();
  const double vT = xT.squaredNorm() / n_paths - mT * mT;
  CHECK(std::abs(vT - 1.0) < 4.0 * std::sqrt(2.0 / n_paths));
}

TEST_CASE("exponential drift limit: first-order Euler convergence") {
  Matrix A(1, 1);
  A << 0.1;
  auto coeffs = CoefficientField::make(1).drift_affine(A, Vector::Zero(1)).sigma_zero();
  const double target = std::exp(0.1);
  double prev_err = 1e9;
  for (int n : {8, 16, 32, 64}) {
    const auto ens = simulate(coeffs, {0.0, vec1(1.0)}, TimeGrid(0.0, 1.0, n), 1, 1);
    const double err = std::abs(ens.states_at(n)(0, 0) - target);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-3);
}

TEST_CASE("determinism: same seed bit-identical, different seed not") {
  auto coeffs = CoefficientField::make(2)
                    .drift_affine(0.1 * Matrix::Identity(2, 2), Vector::Zero(2))
                    .sigma_constant(Matrix::Identity(2, 2));
  const Vector x0 = (Vector(2) << 1.0, 2.0).finished();
  const auto a = simulate(coeffs, {0.0, x0}, TimeGrid(0.0, 1.0, 10), 50, 123);
  const auto b = simulate(coeffs, {0.0, x0}, TimeGrid(0.0, 1.0, 10), 50, 123);
  const auto c = simulate(coeffs, {0.0, x0}, TimeGrid(0.0, 1.0, 10), 50, 124);
  CHECK(a.states == b.states);
  CHECK(a.increments == b.increments);
  CHECK(a.states != c.states);
}

TEST_CASE("frozen-before-start convention") {
  auto coeffs = CoefficientField::make(1).drift_constant(vec1(1.0)).sigma_zero();
  const auto ens = simulate(coeffs, {0.5, vec1(2.0)}, TimeGrid(0.5, 1.0, 10), 1, 3);
  CHECK(ens.state_at_time(0, 0.0)[0] == 2.0);
  CHECK(ens.state_at_time(0, 0.5)[0] == 2.0);
  CHECK(ens.state_at_time(0, 1.0)[0] == doctest::Approx(2.5));
}

TEST_CASE("moment check: degenerate and growth forms") {
  auto frozen = CoefficientField::make(1).drift_zero().sigma_zero();
  const auto ens0 = simulate(frozen, {0.0, vec1(-3.0)}, TimeGrid(0.0, 1.0, 4), 5, 9);
  const auto rep0 = moment_check(ens0, 4);
  CHECK(rep0.sup_moment == doctest::Approx(81.0));
  CHECK(rep0.ratio == doctest::Approx(81.0 / 82.0));

  // Brownian sup-moment: E sup_{s<=1} X_s^2 with X_0 = 0 is finite and the
  // ratio stays bounded across starting points (the growth bound form)
  auto bm = CoefficientField::make(1).drift_zero().sigma_constant(Matrix::Identity(1, 1));
  for (double x : {0.0, 10.0, 100.0}) {
    const auto ens = simulate(bm, {0.0, vec1(x)}, TimeGrid(0.0, 1.0, 50), 4000, 11);
    const auto rep = moment_check(ens, 2);
    CHECK(rep.ratio < 5.0);
  }

  // refinement study should not flag an affine-coefficient diffusion
  Matrix A(1, 1);
  A << -0.5;
  auto ou = CoefficientField::make(1)
                .drift_affine(A, Vector::Zero(1))
                .sigma_constant(Matrix::Identity(1, 1));
  const auto study = moment_refinement_study(ou, {0.0, vec1(1.0)}, 1.0, {10, 20, 40}, 2000, 5, 2);
  CHECK_FALSE(study.flagged);
  CHECK(study.reports.size() == 3);

  CHECK_THROWS_AS(moment_check(ens0, 3), std::invalid_argument);
}

TEST_CASE("diagonal affine sigma: geometric-brownian-like positivity of variance scaling") {
  auto gbm = CoefficientField::make(1)
                 .drift_zero()
                 .sigma_diagonal_affine(vec1(0.2), vec1(0.0));
  const auto ens = simulate(gbm, {0.0, vec1(1.0)}, TimeGrid(0.0, 1.0, 100), 4000, 17);
  const auto xT = ens.states_at(100).col(0);
  // E X_T = 1 for driftless multiplicative noise
  CHECK(std::abs(xT.mean() - 1.0) < 4.0 * 0.2 / std::sqrt(4000.0));
  // rejects non-finite coefficients through the state check
  auto bad = CoefficientField::make(1).drift_constant(vec1(1e308)).sigma_zero();
  CHECK_THROWS_AS(simulate(bad, {0.0, vec1(1e308)}, TimeGrid(0.0, 1.0, 2), 1, 1), SolverError);
}
