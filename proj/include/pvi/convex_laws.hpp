#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pvi/convex.hpp"
#include "pvi/prox.hpp"

namespace pvi {

// Seeded property suite for the convex kernel: the directional-derivative
// laws, the two subgradient-membership characterizations, subdifferential
// monotonicity, and the prox contraction/residual properties.  Piecewise
// linear kinds are held to (near-)exact tolerances, smooth kinds to tol_smooth.

struct LawViolation {
  std::string law;
  std::string detail;
};

struct LawReport {
  std::string name;
  long checks = 0;
  long prop2_agree = 0;
  long prop2_total = 0;
  std::vector<LawViolation> violations;
  bool ok() const { return violations.empty(); }
};

struct LawConfig {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  double tol = 1e-6;         // sampled-law acceptance tolerance
  double tol_smooth = 1e-9;  // derivative identities on smooth kinds
  int limit_subsample = 8;   // run the liminf/limsup estimator law every Nth sample
  int limit_n_samples = 16;  // estimator effort inside that law
  // Direction budgets: narrow violating wedges (width ~ tangential/normal
  // ratio of the candidate) set the blindspot rate of the sampled membership
  // tests, so the pair tests get a dense sampler and disagreements are
  // re-examined by an even denser referee.
  int pair_dirs = 300;
  int referee_dirs = 1024;
};

namespace detail {

inline bool leq_tol(const ExtendedReal& a, const ExtendedReal& b, double tol) {
  return a <= b + ExtendedReal(tol);
}

inline bool eq_tol(const ExtendedReal& a, const ExtendedReal& b, double tol) {
  if (a.is_finite() != b.is_finite()) return false;
  if (!a.is_finite()) return a == b;
  return std::abs(a.value() - b.value()) <= tol;
}

inline Vector law_sample_point(const ConvexFunction& phi, SampleStream& stream, int idx) {
  Vector raw = 2.0 * stream.normal_vector(phi.dim());
  if (idx % 4 == 1) {
    // snap a random subset of coordinates to zero to exercise kinks
    for (int i = 0; i < raw.size(); ++i)
      if (stream.uniform() < 0.5) raw[i] = 0.0;
  }
  return prox(phi, 0.7, raw);
}

}  // namespace detail

inline LawReport run_convex_laws(const ConvexFunction& phi, const LawConfig& cfg) {
  LawReport report;
  report.name = to_string(phi.kind());
  const int k = phi.dim();
  const bool pl = phi.piecewise_linear();
  const double dtol = pl ? 1e-12 : cfg.tol_smooth;  // additive slack on dot-product laws
  const double lambda = 0.3;

  auto fail = [&](const std::string& law, int i, const std::string& what) {
    if (report.violations.size() < 64)
      report.violations.push_back({law, "sample " + std::to_string(i) + ": " + what});
    else if (report.violations.size() == 64)
      report.violations.push_back({law, "... further violations suppressed"});
  };
  auto check = [&](bool cond, const char* law, int i, const std::string& what = "") {
    ++report.checks;
    if (!cond) fail(law, i, what);
  };

  for (int i = 0; i < cfg.n_samples; ++i) {
    SampleStream stream(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
    DirectionSampler dirs{cfg.pair_dirs, cfg.seed ^ static_cast<std::uint64_t>(i * 2654435761u)};
    try {
      const Vector u = detail::law_sample_point(phi, stream, i);
      const Vector v = detail::law_sample_point(phi, stream, i + 1);
      const Vector z = stream.unit_vector(k);
      const Vector z2 = stream.unit_vector(k);

      const ExtendedReal dm = dd_minus(phi, u, z);
      const ExtendedReal dp = dd_plus(phi, u, z);

      // Theorem 1(a): φ'_−(u;z) ≤ φ'_+(u;z)
      check(detail::leq_tol(dm, dp, dtol), "thm1a", i);

      // Theorem 1(b): φ'_−(u;−z) = −φ'_+(u;z)
      check(detail::eq_tol(dd_minus(phi, u, -z), -dp, dtol), "thm1b", i);

      // Theorem 1(c): positive homogeneity with dyadic t (exact scaling)
      const double t = std::ldexp(1.0, (i % 7) - 3);  // 2^-3 .. 2^3
      check(dd_plus(phi, u, t * z) == t * dp, "thm1c_homogeneity", i);

      // Theorem 1(c): subadditivity of φ'_+(u;·) when both terms are finite
      const ExtendedReal dz1 = dd_plus(phi, u, z);
      const ExtendedReal dz2 = dd_plus(phi, u, z2);
      if (dz1.is_finite() && dz2.is_finite()) {
        check(detail::leq_tol(dd_plus(phi, u, z + z2), dz1 + dz2, dtol), "thm1c_subadditive", i);
      } else {
        ++report.checks;
      }

      // Lemma 8(a): φ'_−(u; u−v) ≥ φ'_+(v; u−v)
      const Vector w = u - v;
      check(detail::leq_tol(dd_plus(phi, v, w), dd_minus(phi, u, w), dtol), "lemma8a", i);

      // Lemma 8(b): sampled liminf/limsup bracket the one-sided derivatives
      if (i % cfg.limit_subsample == 0) {
        const auto radii = default_limit_radii();
        const ExtendedReal li =
            dir_deriv_liminf_sampled(phi, u, z, radii, cfg.limit_n_samples, stream);
        const ExtendedReal ls =
            dir_deriv_limsup_sampled(phi, u, z, radii, cfg.limit_n_samples, stream);
        check(detail::leq_tol(li, dm, cfg.tol), "lemma8b_liminf", i);
        check(detail::leq_tol(dp, ls, cfg.tol), "lemma8b_limsup", i);
      }

      // Prop 2: agreement of the derivative test with the definitional test.
      // Distance of u* to the boundary of ∂φ(u), in each test's own units:
      // the derivative test sees min_z ⟨u*,z⟩ − φ'_−(u;z), the definitional
      // one sees max_y ⟨u*,y−u⟩ + φ(u) − φ(y).
      auto boundary_margins = [&](const Vector& us) {
        ExtendedReal dmargin = ExtendedReal::infinity();
        ExtendedReal gmargin = ExtendedReal::neg_infinity();
        const ExtendedReal phi_u = eval(phi, u);
        for (const Vector& d : dirs.directions(k)) {
          dmargin = min(dmargin, ExtendedReal(us.dot(d)) - dd_minus(phi, u, d));
          for (double r : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
            const ExtendedReal gap = ExtendedReal(us.dot(r * d)) + phi_u - eval(phi, u + r * d);
            gmargin = max(gmargin, gap);
          }
        }
        const double dv = dmargin.is_finite() ? std::abs(dmargin.value()) : 1e300;
        const double gv = gmargin.is_finite() ? std::abs(gmargin.value()) : 1e300;
        return std::min(dv, gv);
      };
      auto prop2_pair = [&](const Vector& us, bool count) {
        const bool by_deriv = subdiff_contains(phi, u, us, dirs, cfg.tol);
        const bool by_def = subdiff_contains_definitional(phi, u, us, dirs, cfg.tol);
        if (count) {
          ++report.prop2_total;
          if (by_deriv == by_def) ++report.prop2_agree;
        }
        if (by_deriv != by_def) {
          ++report.checks;
          // Referee with a much denser sampler: if its two verdicts agree,
          // the original disagreement was a direction-sampling artifact.
          DirectionSampler fine{cfg.referee_dirs, cfg.seed ^ 0xf00dULL};
          const bool rd = subdiff_contains(phi, u, us, fine, cfg.tol);
          const bool rf = subdiff_contains_definitional(phi, u, us, fine, cfg.tol);
          if (rd != rf && boundary_margins(us) > 20 * cfg.tol)
            fail("prop2_margin", i, "far-from-boundary disagreement");
        }
      };
      const auto section = minimal_section(phi, u);
      if (section.vec) {
        prop2_pair(*section.vec, true);
        prop2_pair(*section.vec + (0.5 + stream.uniform()) * stream.unit_vector(k), true);
        // every 32nd sample: a candidate hugging the boundary of ∂φ(u), kept
        // out of the agreement count — it exists to exercise the
        // near-boundary classification, not the generic-sample statistics
        if (i % 32 == 5) prop2_pair(*section.vec + (0.5 * cfg.tol) * stream.unit_vector(k), false);
      }
      prop2_pair(2.0 * stream.normal_vector(k), true);

      // Monotonicity of ∂φ through exact graph pairs from the prox residual
      const Vector a = u + stream.normal_vector(k);
      const Vector b = v + stream.normal_vector(k);
      const Vector pa = prox(phi, lambda, a);
      const Vector pb = prox(phi, lambda, b);
      const Vector ga = (a - pa) / lambda;
      const Vector gb = (b - pb) / lambda;
      check((ga - gb).dot(pa - pb) >= -1e-9, "subdiff_monotone_prox", i);

      // ... and through minimal sections where both exist
      const auto sec_v = minimal_section(phi, v);
      if (section.vec && sec_v.vec) {
        check((*section.vec - *sec_v.vec).dot(u - v) >= -1e-9, "subdiff_monotone_section", i);
      } else {
        ++report.checks;
      }

      // Prox is firmly nonexpansive
      const double lhs = (pa - pb).norm();
      check(lhs <= (a - b).norm() * (1.0 + 1e-12) + 1e-12, "prox_nonexpansive", i);
      check((pa - pb).dot(a - b) >= lhs * lhs - 1e-9, "prox_firm", i);

      // Prox residual is a subgradient at the prox point
      check(subdiff_contains(phi, pa, ga, dirs, cfg.tol), "prox_residual_subgradient", i);
    } catch (const std::exception& e) {
      fail("exception", i, e.what());
    }
  }

  // Prop 2 aggregate: the two tests agree on at least 99% of samples
  ++report.checks;
  if (report.prop2_total > 0 &&
      report.prop2_agree < static_cast<long>(0.99 * static_cast<double>(report.prop2_total)))
    report.violations.push_back(
        {"prop2_agreement", std::to_string(report.prop2_agree) + "/" +
                                std::to_string(report.prop2_total) + " below 99%"});
  return report;
}

/// One representative instance per registry kind, used by the verification
/// command and the acceptance suite.
inline std::vector<std::pair<std::string, ConvexFunction>> builtin_law_instances() {
  std::vector<std::pair<std::string, ConvexFunction>> out;
  out.emplace_back("zero(k=2)", ConvexFunction::zero(2));
  out.emplace_back("separable_abs(k=2)", ConvexFunction::separable_abs(2));
  out.emplace_back("euclidean_norm(k=2)", ConvexFunction::euclidean_norm(2));
  {
    Matrix Q(2, 2);
    Q << 2.0, 0.5, 0.5, 1.0;
    out.emplace_back("quadratic(k=2)", ConvexFunction::quadratic(Q));
  }
  {
    Vector lo(2), hi(2);
    lo << -1.0, 0.0;
    hi << 1.0, std::numeric_limits<double>::infinity();
    out.emplace_back("indicator_box(k=2)", ConvexFunction::indicator_box(lo, hi));
  }
  {
    Vector c(2);
    c << 0.3, -0.2;
    out.emplace_back("indicator_ball(k=2)", ConvexFunction::indicator_ball(c, 1.5));
  }
  {
    Vector n(2);
    n << 1.0, 2.0;
    out.emplace_back("indicator_halfspace(k=2)", ConvexFunction::indicator_halfspace(n, 0.5));
  }
  {
    Matrix A(3, 2);
    A << 1.0, 0.5, -1.0, 0.25, 0.0, -1.0;
    Vector c(3);
    c << 0.0, 0.3, -0.2;
    out.emplace_back("max_of_affine(k=2)", ConvexFunction::max_of_affine(A, c));
  }
  {
    Vector lo(2), hi(2);
    lo << -2.0, -2.0;
    hi << 2.0, 2.0;
    auto sum = ConvexFunction::scaled_sum(
        {0.5, 1.0, 1.0},
        {ConvexFunction::separable_abs(2), ConvexFunction::quadratic(Matrix::Identity(2, 2)),
         ConvexFunction::indicator_box(lo, hi)});
    out.emplace_back("scaled_sum(k=2)", std::move(sum));
  }
  return out;
}

}  // namespace pvi
