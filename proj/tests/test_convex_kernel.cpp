#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "pvi/convex.hpp"
#include "pvi/prox.hpp"

using namespace pvi;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

const double kInf = std::numeric_limits<double>::infinity();

// Brute-force 1-D minimizer of f over [lo, hi]: coarse grid then two rounds of
// refinement.  Independent oracle for prox and Moreau values.
template <class F>
double grid_argmin(F f, double lo, double hi, int n = 20001, int refinements = 3) {
  double best_x = lo, best = std::numeric_limits<double>::infinity();
  for (int round = 0; round <= refinements; ++round) {
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double x = lo + i * h;
      const double v = f(x);
      if (v < best) {
        best = v;
        best_x = x;
      }
    }
    lo = best_x - h;
    hi = best_x + h;
  }
  return best_x;
}

}  // namespace

TEST_CASE("eval: indicator and separable-abs examples") {
  auto box = ConvexFunction::indicator_box(vec2(0, 0), vec2(kInf, kInf));
  CHECK(eval(box, vec2(1, 1)).value() == 0.0);
  CHECK(eval(box, vec2(-1, 0)).is_pos_inf());
  auto abs2 = ConvexFunction::separable_abs(2);
  CHECK(eval(abs2, vec2(3, -4)).value() == 7.0);
}

TEST_CASE("eval: remaining kinds at simple points") {
  CHECK(eval(ConvexFunction::zero(3), Vector::Zero(3)).value() == 0.0);
  CHECK(eval(ConvexFunction::euclidean_norm(2), vec2(3, 4)).value() == doctest::Approx(5.0));
  Matrix Q(2, 2);
  Q << 2, 0, 0, 4;
  CHECK(eval(ConvexFunction::quadratic(Q), vec2(1, 1)).value() == doctest::Approx(3.0));
  auto ball = ConvexFunction::indicator_ball(vec2(0, 0), 1.0);
  CHECK(eval(ball, vec2(0.6, 0.8)).value() == 0.0);
  CHECK(eval(ball, vec2(1.0, 0.1)).is_pos_inf());
  auto half = ConvexFunction::indicator_halfspace(vec2(1, 1), 1.0);
  CHECK(eval(half, vec2(0.5, 0.5)).value() == 0.0);
  CHECK(eval(half, vec2(1, 1)).is_pos_inf());
  Matrix A(2, 1);
  A << 1, -1;
  Vector c = vec2(0, 0);
  auto maxaff = ConvexFunction::max_of_affine(A, c);  // = |u|
  CHECK(eval(maxaff, vec1(-3)).value() == doctest::Approx(3.0));
}

TEST_CASE("constructor validation") {
  Matrix bad(2, 2);
  bad << -1, 0, 0, 1;
  CHECK_THROWS_AS(ConvexFunction::quadratic(bad), ConfigError);
  CHECK_NOTHROW(ConvexFunction::quadratic_unchecked(bad));
  CHECK_THROWS_AS(ConvexFunction::indicator_box(vec1(1), vec1(0)), ConfigError);
  CHECK_THROWS_AS(ConvexFunction::indicator_ball(vec1(0), 0.0), ConfigError);
  CHECK_THROWS_AS(ConvexFunction::indicator_halfspace(vec1(0), 1.0), ConfigError);
  // improper sum: disjoint boxes
  auto b1 = ConvexFunction::indicator_box(vec1(0), vec1(1));
  auto b2 = ConvexFunction::indicator_box(vec1(2), vec1(3));
  CHECK_THROWS_AS(ConvexFunction::scaled_sum({1.0, 1.0}, {b1, b2}), ConfigError);
}

TEST_CASE("dir_deriv: closed-form examples") {
  auto abs1 = ConvexFunction::separable_abs(1);
  CHECK(dir_deriv(abs1, vec1(0), vec1(1), Side::plus).value.value() == 1.0);
  CHECK(dir_deriv(abs1, vec1(0), vec1(1), Side::minus).value.value() == -1.0);
  CHECK(dir_deriv(abs1, vec1(2), vec1(1), Side::plus).value.value() == 1.0);
  CHECK(dir_deriv(abs1, vec1(2), vec1(1), Side::minus).value.value() == 1.0);

  auto box01 = ConvexFunction::indicator_box(vec1(0), vec1(1));
  CHECK(dir_deriv(box01, vec1(0), vec1(-1), Side::plus).value.is_pos_inf());
  CHECK(dir_deriv(box01, vec1(0), vec1(1), Side::plus).value.value() == 0.0);
  CHECK(dir_deriv(box01, vec1(0), vec1(1), Side::minus).value.is_neg_inf());
  CHECK_THROWS_AS(dir_deriv(box01, vec1(2), vec1(1), Side::plus), std::domain_error);
}

TEST_CASE("dir_deriv: quadratic difference-quotient sequence matches the gradient") {
  Matrix Q(1, 1);
  Q << 1.0;
  auto quad = ConvexFunction::quadratic(Q);  // ½u²
  const auto closed = dir_deriv(quad, vec1(2), vec1(1), Side::plus);
  CHECK(closed.method == DirDerivResult::Method::closed_form);
  CHECK(closed.value.value() == doctest::Approx(2.0));

  const auto seq_plus = dir_deriv_numeric(quad, vec1(2), vec1(1), Side::plus);
  CHECK(seq_plus.method == DirDerivResult::Method::limit_sequence);
  CHECK(seq_plus.t_sequence.size() >= 20);  // truncated where cancellation takes over
  CHECK(seq_plus.t_sequence.size() <= 40);
  CHECK(seq_plus.value.value() == doctest::Approx(2.0).epsilon(1e-7));
  const auto seq_minus = dir_deriv_numeric(quad, vec1(2), vec1(1), Side::minus);
  CHECK(seq_minus.value.value() == doctest::Approx(2.0).epsilon(1e-7));

  // Monotonicity of the quotient along the sequence (the Eq-(2) structure):
  // recompute the plus-side quotients and check they never increase as t ↓ 0.
  double prev = std::numeric_limits<double>::infinity();
  for (double t : seq_plus.t_sequence) {
    const double q = (0.5 * (2 + t) * (2 + t) - 0.5 * 4.0) / t;
    CHECK(q <= prev + 1e-15);
    prev = q;
  }
}

TEST_CASE("dir_deriv_numeric agrees with closed forms across kinds") {
  std::vector<ConvexFunction> phis;
  phis.push_back(ConvexFunction::separable_abs(2));
  phis.push_back(ConvexFunction::euclidean_norm(2));
  Matrix Q(2, 2);
  Q << 2, 1, 1, 3;
  phis.push_back(ConvexFunction::quadratic(Q));
  Matrix A(3, 2);
  A << 1, 0, 0, 1, -1, -1;
  phis.push_back(ConvexFunction::max_of_affine(A, Vector::Zero(3)));
  SampleStream stream(11, 0);
  for (const auto& phi : phis) {
    for (int rep = 0; rep < 20; ++rep) {
      const Vector u = stream.normal_vector(2);
      const Vector z = stream.unit_vector(2);
      for (Side side : {Side::plus, Side::minus}) {
        const auto closed = dir_deriv(phi, u, z, side);
        const auto numeric = dir_deriv_numeric(phi, u, z, side);
        REQUIRE(closed.value.is_finite());
        REQUIRE(numeric.value.is_finite());
        CHECK(numeric.value.value() ==
              doctest::Approx(closed.value.value()).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("subdiff_interval_1d: Eq-(3) style intervals") {
  auto abs1 = ConvexFunction::separable_abs(1);
  auto [lo0, hi0] = subdiff_interval_1d(abs1, 0.0);
  CHECK(lo0.value() == -1.0);
  CHECK(hi0.value() == 1.0);
  auto [lo2, hi2] = subdiff_interval_1d(abs1, 2.0);
  CHECK(lo2.value() == 1.0);
  CHECK(hi2.value() == 1.0);

  auto box01 = ConvexFunction::indicator_box(vec1(0), vec1(1));
  auto [lob, hib] = subdiff_interval_1d(box01, 1.0);
  CHECK(lob.value() == 0.0);
  CHECK(hib.is_pos_inf());
  auto [loa, hia] = subdiff_interval_1d(box01, 0.0);
  CHECK(loa.is_neg_inf());
  CHECK(hia.value() == 0.0);

  CHECK_THROWS_AS(subdiff_interval_1d(ConvexFunction::zero(2), 0.0), std::invalid_argument);
}

TEST_CASE("subdiff_contains: Prop-2 sampled test") {
  DirectionSampler dirs{32, 7};
  auto abs1 = ConvexFunction::separable_abs(1);
  CHECK(subdiff_contains(abs1, vec1(0), vec1(0.5), dirs, 1e-9));
  CHECK_FALSE(subdiff_contains(abs1, vec1(0), vec1(1.5), dirs, 1e-9));

  auto quad2 = ConvexFunction::quadratic(Matrix::Identity(2, 2));
  CHECK(subdiff_contains(quad2, vec2(1, 2), vec2(1, 2), dirs, 1e-9));
  CHECK_FALSE(subdiff_contains(quad2, vec2(1, 2), vec2(1, 2.1), dirs, 1e-6));

  // definitional variant agrees on these
  CHECK(subdiff_contains_definitional(abs1, vec1(0), vec1(0.5), dirs, 1e-9));
  CHECK_FALSE(subdiff_contains_definitional(abs1, vec1(0), vec1(1.5), dirs, 1e-9));
  CHECK_THROWS_AS(subdiff_contains(ConvexFunction::indicator_box(vec1(0), vec1(1)), vec1(2),
                                   vec1(0), dirs, 1e-9),
                  std::domain_error);
}

TEST_CASE("prox: closed forms and the grid oracle") {
  // identity for Zero
  auto zero2 = ConvexFunction::zero(2);
  CHECK(prox(zero2, 3.0, vec2(3, -1)) == vec2(3, -1));

  // projection for the half-line indicator
  auto hl = ConvexFunction::indicator_box(vec1(0), vec1(kInf));
  CHECK(prox(hl, 1.0, vec1(-2))[0] == 0.0);
  CHECK(prox(hl, 1.0, vec1(2))[0] == 2.0);

  // soft threshold vs brute-force grid minimization of |u| + (u−3)²/2
  auto abs1 = ConvexFunction::separable_abs(1);
  const double oracle = grid_argmin([](double u) { return std::abs(u) + (u - 3) * (u - 3) / 2.0; },
                                    -10.0, 10.0);
  CHECK(oracle == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(prox(abs1, 1.0, vec1(3))[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(prox(abs1, 0.0, vec1(1)), std::invalid_argument);
  CHECK_THROWS_AS(prox(abs1, -1.0, vec1(1)), std::invalid_argument);
}

TEST_CASE("prox: quadratic solve and ball/halfspace projections") {
  Matrix Q(2, 2);
  Q << 2, 1, 1, 2;
  auto quad = ConvexFunction::quadratic(Q);
  const Vector v = vec2(1, -2);
  const double lam = 0.7;
  const Vector u = prox(quad, lam, v);
  // optimality: (v−u)/λ = Qu
  CHECK(((v - u) / lam - Q * u).norm() < 1e-12);

  auto ball = ConvexFunction::indicator_ball(vec2(1, 1), 2.0);
  const Vector pb = prox(ball, 5.0, vec2(10, 1));
  CHECK(pb[0] == doctest::Approx(3.0));
  CHECK(pb[1] == doctest::Approx(1.0));

  auto half = ConvexFunction::indicator_halfspace(vec2(0, 1), 0.0);  // u2 <= 0
  const Vector ph = prox(half, 1.0, vec2(4, 3));
  CHECK(ph[0] == doctest::Approx(4.0));
  CHECK(ph[1] == doctest::Approx(0.0));
}

TEST_CASE("prox: max-of-affine enumeration vs abs and a 2-D grid oracle") {
  // max(u, −u) = |u| must reproduce the soft threshold exactly
  Matrix A(2, 1);
  A << 1, -1;
  auto maxabs = ConvexFunction::max_of_affine(A, vec2(0, 0));
  auto abs1 = ConvexFunction::separable_abs(1);
  for (double v : {-3.0, -0.4, 0.0, 0.9, 5.0}) {
    CHECK(prox(maxabs, 0.8, vec1(v))[0] == doctest::Approx(prox(abs1, 0.8, vec1(v))[0]));
  }

  // three-plane max-affine in 2-D against a refined grid search
  Matrix A2(3, 2);
  A2 << 1, 0.5, -1, 0.25, 0, -1;
  Vector c2(3);
  c2 << 0.0, 0.3, -0.2;
  auto ma = ConvexFunction::max_of_affine(A2, c2);
  const Vector v = vec2(0.7, -1.1);
  const double lam = 0.9;
  const Vector u = prox(ma, lam, v);
  auto obj = [&](double x, double y) {
    Vector p = vec2(x, y);
    return eval(ma, p).value() + (p - v).squaredNorm() / (2 * lam);
  };
  double bx = 0, by = 0, best = std::numeric_limits<double>::infinity();
  double lo_x = -4, hi_x = 4, lo_y = -4, hi_y = 4;
  for (int round = 0; round < 6; ++round) {
    const int n = 81;
    const double hx = (hi_x - lo_x) / (n - 1), hy = (hi_y - lo_y) / (n - 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double val = obj(lo_x + i * hx, lo_y + j * hy);
        if (val < best) {
          best = val;
          bx = lo_x + i * hx;
          by = lo_y + j * hy;
        }
      }
    // ±4 cells: the grid argmin of a non-separable convex function can sit a
    // few cells away from the continuous one
    lo_x = bx - 4 * hx;
    hi_x = bx + 4 * hx;
    lo_y = by - 4 * hy;
    hi_y = by + 4 * hy;
  }
  CHECK(u[0] == doctest::Approx(bx).epsilon(1e-4));
  CHECK(u[1] == doctest::Approx(by).epsilon(1e-4));
  CHECK(obj(u[0], u[1]) <= best + 1e-10);
}

TEST_CASE("prox: scaled sums via the 1-D backend and consensus ADMM") {
  // 1-D: w|u| + box clamp — shrink then clamp is the known composition
  auto abs1 = ConvexFunction::separable_abs(1);
  auto box = ConvexFunction::indicator_box(vec1(-1), vec1(1));
  auto sum1 = ConvexFunction::scaled_sum({1.0, 1.0}, {abs1, box});
  CHECK(prox(sum1, 0.7, vec1(3.0))[0] == doctest::Approx(1.0));
  CHECK(prox(sum1, 0.7, vec1(1.2))[0] == doctest::Approx(0.5));
  CHECK(prox(sum1, 0.7, vec1(0.3))[0] == doctest::Approx(0.0));

  // 2-D sum abs + quadratic: separable, so a per-coordinate grid oracle works
  auto abs2 = ConvexFunction::separable_abs(2);
  auto quad2 = ConvexFunction::quadratic(Matrix::Identity(2, 2));
  auto sum2 = ConvexFunction::scaled_sum({0.5, 1.0}, {abs2, quad2});
  const Vector v = vec2(3.0, -2.0);
  const double lam = 0.7;
  const Vector u = prox(sum2, lam, v);
  for (int i = 0; i < 2; ++i) {
    const double vi = v[i];
    const double oracle = grid_argmin(
        [&](double x) { return 0.5 * std::abs(x) + 0.5 * x * x + (x - vi) * (x - vi) / (2 * lam); },
        -10.0, 10.0);
    CHECK(u[i] == doctest::Approx(oracle).epsilon(1e-6));
  }

  // 2-D sum with an indicator atom: membership must be exact after polish
  auto box2 = ConvexFunction::indicator_box(vec2(0, 0), vec2(kInf, kInf));
  auto sum3 = ConvexFunction::scaled_sum({1.0, 1.0}, {abs2, box2});
  const Vector u3 = prox(sum3, 0.5, vec2(-3.0, 2.0));
  CHECK(eval(sum3, u3).is_finite());
  CHECK(u3[0] == doctest::Approx(0.0));
  CHECK(u3[1] == doctest::Approx(1.5));
  CHECK(u3[0] >= 0.0);
}

TEST_CASE("minimal_section: closed forms") {
  auto abs1 = ConvexFunction::separable_abs(1);
  auto s0 = minimal_section(abs1, vec1(0));
  CHECK(s0.vec->operator[](0) == 0.0);
  CHECK(s0.norm.value() == 0.0);
  auto s2 = minimal_section(abs1, vec1(2));
  CHECK(s2.vec->operator[](0) == 1.0);
  CHECK(s2.norm.value() == 1.0);

  auto box01 = ConvexFunction::indicator_box(vec1(0), vec1(1));
  auto sbox = minimal_section(box01, vec1(0.5));
  CHECK(sbox.norm.value() == 0.0);
  auto sout = minimal_section(box01, vec1(2));
  CHECK_FALSE(sout.vec.has_value());
  CHECK(sout.norm.is_pos_inf());

  // max-affine at a kink of |u|: least-norm element of [−1,1] is 0
  Matrix A(2, 1);
  A << 1, -1;
  auto maxabs = ConvexFunction::max_of_affine(A, vec2(0, 0));
  CHECK(minimal_section(maxabs, vec1(0)).norm.value() == doctest::Approx(0.0));
  CHECK(minimal_section(maxabs, vec1(3)).vec->operator[](0) == doctest::Approx(1.0));

  // prox-limit cross-check (the documented identity) on the smooth quadratic
  Matrix Q(2, 2);
  Q << 2, 0, 0, 4;
  auto quad = ConvexFunction::quadratic(Q);
  const Vector u = vec2(1, -1);
  const auto sec = minimal_section(quad, u);
  for (double lam : {1e-4, 1e-6, 1e-8}) {
    const Vector g = (u - prox(quad, lam, u)) / lam;
    CHECK((g - *sec.vec).norm() < 10 * lam * 16 + 1e-9);
  }
}

TEST_CASE("minimal_section: scaled sum via the prox limit") {
  // |u| + I_{u<=0} at u = 0: ∂φ(0) = [−1,1] + [0,∞) = [−1,∞) → least norm 0
  auto abs1 = ConvexFunction::separable_abs(1);
  auto half = ConvexFunction::indicator_halfspace(vec1(1), 0.0);
  auto sum = ConvexFunction::scaled_sum({1.0, 1.0}, {abs1, half});
  CHECK(minimal_section(sum, vec1(0)).norm.value() == doctest::Approx(0.0).epsilon(1e-6));
  // at u = −2 the subdifferential is {−1} + {0}
  CHECK(minimal_section(sum, vec1(-2)).vec->operator[](0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("dir_deriv liminf/limsup: closed forms and sampled estimators") {
  auto abs1 = ConvexFunction::separable_abs(1);
  SampleStream stream(123, 1);
  const auto radii = default_limit_radii();

  // φ'_*(0;1) = −1, φ'^*(0;1) = +1 for |·|
  CHECK(dir_deriv_liminf(abs1, vec1(0), vec1(1)).value() == -1.0);
  CHECK(dir_deriv_limsup(abs1, vec1(0), vec1(1)).value() == 1.0);
  CHECK(dir_deriv_liminf_sampled(abs1, vec1(0), vec1(1), radii, 64, stream).value() == -1.0);
  CHECK(dir_deriv_limsup_sampled(abs1, vec1(0), vec1(1), radii, 64, stream).value() == 1.0);

  // Zero: everything vanishes
  auto zero1 = ConvexFunction::zero(1);
  CHECK(dir_deriv_liminf(zero1, vec1(0.3), vec1(1)).value() == 0.0);
  CHECK(dir_deriv_liminf_sampled(zero1, vec1(0.3), vec1(1), radii, 16, stream).value() == 0.0);

  // smooth case: ½u² at u=2 — both collapse to the gradient pairing
  Matrix Q(1, 1);
  Q << 1.0;
  auto quad = ConvexFunction::quadratic(Q);
  CHECK(dir_deriv_liminf(quad, vec1(2), vec1(1)).value() == doctest::Approx(2.0));
  const auto est = dir_deriv_liminf_sampled(quad, vec1(2), vec1(1), radii, 64, stream);
  CHECK(est.value() == doctest::Approx(2.0).epsilon(2e-4));
  const auto est_up = dir_deriv_limsup_sampled(quad, vec1(2), vec1(1), radii, 64, stream);
  CHECK(est_up.value() == doctest::Approx(2.0).epsilon(2e-4));

  // indicator boundary: φ'_*(0; +1) = −∞ (the center sample is decisive),
  // φ'_*(0; −1) = 0 for the half-line
  auto hl = ConvexFunction::indicator_box(vec1(0), vec1(kInf));
  CHECK(dir_deriv_liminf(hl, vec1(0), vec1(1)).is_neg_inf());
  CHECK(dir_deriv_liminf(hl, vec1(0), vec1(-1)).value() == 0.0);
  CHECK(dir_deriv_liminf_sampled(hl, vec1(0), vec1(1), radii, 32, stream).is_neg_inf());
  CHECK(dir_deriv_liminf_sampled(hl, vec1(0), vec1(-1), radii, 32, stream).value() == 0.0);

  CHECK_THROWS_AS(dir_deriv_liminf_sampled(abs1, vec1(0), vec1(1), {}, 8, stream),
                  std::invalid_argument);
}

TEST_CASE("moreau envelope: derived values") {
  auto zero2 = ConvexFunction::zero(2);
  CHECK(moreau_envelope(zero2, 1.0, vec2(5, -7)) == doctest::Approx(0.0));

  auto abs1 = ConvexFunction::separable_abs(1);
  // oracle: min_u |u| + (3−u)²/2 = 2.5
  double env_oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200000; ++i) {
    const double u = -10 + i * 1e-4;
    env_oracle = std::min(env_oracle, std::abs(u) + (u - 3) * (u - 3) / 2);
  }
  CHECK(env_oracle == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(moreau_envelope(abs1, 1.0, vec1(3)) == doctest::Approx(2.5));

  auto hl = ConvexFunction::indicator_box(vec1(0), vec1(kInf));
  CHECK(moreau_envelope(hl, 2.0, vec1(-2)) == doctest::Approx(1.0));
}

TEST_CASE("domain helpers") {
  auto box = ConvexFunction::indicator_box(vec2(0, 0), vec2(1, kInf));
  CHECK(in_domain(box, vec2(0.5, 100.0)));
  CHECK_FALSE(in_domain(box, vec2(-0.1, 0.5)));
  CHECK(in_domain(box, domain_point(box)));

  auto half = ConvexFunction::indicator_halfspace(vec2(1, 2), -3.0);
  CHECK(in_domain(half, domain_point(half)));

  auto abs2 = ConvexFunction::separable_abs(2);
  auto ball = ConvexFunction::indicator_ball(vec2(5, 5), 1.0);
  auto sum = ConvexFunction::scaled_sum({1.0, 1.0}, {abs2, ball});
  CHECK(in_domain(sum, domain_point(sum)));

  // project_subdiff_domain is the identity on Dom(∂φ)
  CHECK(project_subdiff_domain(abs2, vec2(3, 4)) == vec2(3, 4));
  const Vector pr = project_subdiff_domain(ball, vec2(9, 5));
  CHECK(in_subdiff_domain(ball, pr));
}
