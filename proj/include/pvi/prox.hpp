#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "pvi/convex.hpp"

namespace pvi {

/// Displacement tolerance of the numeric prox backends: the computed point u
/// satisfies dist(0, ∂φ(u) + (u−v)/λ)·λ ≤ prox_tol·(1+|u|+|v|), i.e. u is
/// within prox_tol·scale of the exact resolvent.
inline constexpr double kProxTol = 1e-10;

namespace detail {

// Breakpoints (kinks) of a one-dimensional registry function; used to snap
// the numeric 1-D prox onto nondifferentiability points.
inline void breakpoints_1d(const ConvexFunction& phi, std::vector<double>& out) {
  switch (phi.kind()) {
    case ConvexKind::SeparableAbs:
    case ConvexKind::EuclideanNorm:
      out.push_back(0.0);
      break;
    case ConvexKind::IndicatorBox: {
      if (std::isfinite(phi.box().lo[0])) out.push_back(phi.box().lo[0]);
      if (std::isfinite(phi.box().hi[0])) out.push_back(phi.box().hi[0]);
      break;
    }
    case ConvexKind::IndicatorBall: {
      out.push_back(phi.ball().center[0] - phi.ball().radius);
      out.push_back(phi.ball().center[0] + phi.ball().radius);
      break;
    }
    case ConvexKind::IndicatorHalfspace:
      out.push_back(phi.halfspace().offset / phi.halfspace().normal[0]);
      break;
    case ConvexKind::MaxOfAffine: {
      const auto& m = phi.max_affine();
      for (int i = 0; i < m.A.rows(); ++i) {
        for (int j = i + 1; j < m.A.rows(); ++j) {
          const double da = m.A(i, 0) - m.A(j, 0);
          if (da != 0.0) out.push_back((m.c[j] - m.c[i]) / da);
        }
      }
      break;
    }
    case ConvexKind::ScaledSum: {
      for (const auto& t : phi.sum().terms) breakpoints_1d(*t, out);
      break;
    }
    default:
      break;
  }
}

// dist(0, (x−v)/λ + [φ'_−(x), φ'_+(x)]) for k = 1.
inline double optimality_residual_1d(const ConvexFunction& phi, double lambda, double v, double x) {
  Vector xx(1), one(1);
  xx[0] = x;
  one[0] = 1.0;
  const ExtendedReal shift((x - v) / lambda);
  const ExtendedReal lo = dd_minus(phi, xx, one) + shift;
  const ExtendedReal hi = dd_plus(phi, xx, one) + shift;
  if (lo <= ExtendedReal(0.0) && ExtendedReal(0.0) <= hi) return 0.0;
  if (lo > ExtendedReal(0.0)) return lo.value();  // φ'_− never equals +∞ on Dom
  return -hi.value();                             // φ'_+ never equals −∞ on Dom
}

Vector prox_impl(const ConvexFunction& phi, double lambda, const Eigen::Ref<const Vector>& v);

// Generic strictly convex 1-D minimization of φ(x) + (x−v)²/(2λ): monotone
// bisection on the sign of the right derivative, then a snap onto nearby
// breakpoints where the subgradient interval absorbs the optimality residual.
inline double prox_1d_numeric(const ConvexFunction& phi, double lambda, double v) {
  Vector tmp(1);
  auto member = [&](double x) {
    tmp[0] = x;
    return in_domain(phi, tmp);
  };
  const double anchor = member(v) ? v : domain_point(phi)[0];
  Vector one(1);
  one[0] = 1.0;
  auto derivative_nonneg = [&](double x) -> bool {
    if (!member(x)) return x > anchor;  // outside Dom the minimum lies toward the domain
    tmp[0] = x;
    return dd_plus(phi, tmp, one) + ExtendedReal((x - v) / lambda) >= ExtendedReal(0.0);
  };

  double lo = anchor, hi = anchor;
  double step = 1.0 + std::abs(anchor) + std::abs(v - anchor);
  if (derivative_nonneg(anchor)) {
    int it = 0;
    lo = anchor - step;
    while (derivative_nonneg(lo)) {
      step *= 2.0;
      lo = anchor - step;
      if (++it > 200) throw SolverError("prox_1d: bracket expansion failed (left)");
    }
  } else {
    int it = 0;
    hi = anchor + step;
    while (!derivative_nonneg(hi)) {
      step *= 2.0;
      hi = anchor + step;
      if (++it > 200) throw SolverError("prox_1d: bracket expansion failed (right)");
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    (derivative_nonneg(mid) ? hi : lo) = mid;
  }

  std::vector<double> candidates{hi, lo, 0.5 * (lo + hi)};
  std::vector<double> kinks;
  breakpoints_1d(phi, kinks);
  const double span = std::abs(hi - lo) + 1e-9 * (1.0 + std::abs(hi));
  for (double b : kinks)
    if (b >= lo - span && b <= hi + span) candidates.push_back(b);

  // Pick by optimality residual, breaking residual ties by the objective so
  // that an exact kink beats a bisection endpoint sitting a slack away.
  auto objective = [&](double x) {
    tmp[0] = x;
    return eval(phi, tmp) + ExtendedReal((x - v) * (x - v) / (2.0 * lambda));
  };
  double best_x = hi;
  double best_res = std::numeric_limits<double>::infinity();
  ExtendedReal best_obj = ExtendedReal::infinity();
  for (double c : candidates) {
    if (!member(c)) continue;
    const double res = optimality_residual_1d(phi, lambda, v, c);
    const ExtendedReal obj = objective(c);
    const bool better = res < best_res - 1e-15 * (1.0 + best_res) ||
                        (res <= best_res + 1e-15 * (1.0 + best_res) && obj < best_obj);
    if (better) {
      best_res = res;
      best_obj = obj;
      best_x = c;
    }
  }
  if (best_res * lambda > kProxTol * (1.0 + std::abs(v) + std::abs(best_x)))
    throw SolverError("prox_1d: optimality residual above prox_tol");
  return best_x;
}

// Consensus ADMM for prox of a flat scaled sum, k >= 2.  Atom prox maps are
// exact, so the only error source is the consensus gap, driven below
// 1e-12·scale before the indicator-feasibility polish.
inline Vector prox_sum_admm(const ConvexFunction& phi, double lambda,
                            const Eigen::Ref<const Vector>& v) {
  const auto& s = phi.sum();
  const int k = phi.dim();
  const std::size_t m = s.terms.size();
  const double rho = 1.0 / lambda;

  Vector z = in_domain(phi, v) ? Vector(v) : domain_point(phi);
  std::vector<Vector> x(m, z), d(m, Vector::Zero(k));
  const double eps = 1e-12 * (1.0 + v.cwiseAbs().maxCoeff());
  bool converged = false;
  for (int iter = 0; iter < 200000; ++iter) {
    for (std::size_t i = 0; i < m; ++i) x[i] = prox_impl(*s.terms[i], s.weights[i] / rho, z - d[i]);
    const Vector z_prev = z;
    Vector acc = v / lambda;
    for (std::size_t i = 0; i < m; ++i) acc += rho * (x[i] + d[i]);
    z = acc / (1.0 / lambda + static_cast<double>(m) * rho);
    double primal = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      d[i] += x[i] - z;
      primal = std::max(primal, (x[i] - z).cwiseAbs().maxCoeff());
    }
    const double dz = (z - z_prev).cwiseAbs().maxCoeff();
    // For tiny λ the scaled dual residual ρ·dz cannot reach eps in doubles;
    // a machine-precision stall of z counts as dual convergence.
    const bool dual_ok = rho * dz <= eps || dz <= 1e-15 * (1.0 + z.cwiseAbs().maxCoeff());
    if (primal <= eps && dual_ok) {
      converged = true;
      break;
    }
  }
  if (!converged) throw SolverError("prox: consensus ADMM did not converge");
  // Snap onto atom kinks and bounds: the consensus point sits O(eps) off the
  // exact resolvent, and when that resolvent lies on a kink the closed-form
  // derivative logic downstream needs the exact coordinates.  The window is
  // far below the kProxTol displacement budget.
  const double snap = 2e-11 * (1.0 + v.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < m; ++i) {
    const auto& t = *s.terms[i];
    switch (t.kind()) {
      case ConvexKind::SeparableAbs:
        for (int j = 0; j < k; ++j)
          if (std::abs(z[j]) <= snap) z[j] = 0.0;
        break;
      case ConvexKind::EuclideanNorm:
        if (z.norm() <= snap) z.setZero();
        break;
      case ConvexKind::IndicatorBox:
        for (int j = 0; j < k; ++j) {
          if (std::abs(z[j] - t.box().lo[j]) <= snap) z[j] = t.box().lo[j];
          if (std::abs(z[j] - t.box().hi[j]) <= snap) z[j] = t.box().hi[j];
        }
        break;
      case ConvexKind::IndicatorHalfspace: {
        const auto& h = t.halfspace();
        const double ex = h.normal.dot(z) - h.offset;
        if (std::abs(ex) <= snap * h.normal.norm()) z -= h.normal * (ex / h.normal.squaredNorm());
        break;
      }
      default:
        break;
    }
  }
  // Feasibility polish: force exact membership in the indicator atoms.
  for (int round = 0; round < 64 && !in_domain(phi, z); ++round) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto& t = *s.terms[i];
      if (t.is_indicator()) z = prox_impl(t, 1.0, z);
    }
  }
  if (!in_domain(phi, z)) throw SolverError("prox: feasibility polish failed");
  return z;
}

// Exact prox of max_j ⟨a_j,u⟩+c_j by enumerating candidate active sets.  The
// minimizer is u = v − λ A_S^T θ with θ in the simplex supported on S and all
// active values equal; each support S gives a small linear system.
inline Vector prox_max_affine(const ConvexFunction& phi, double lambda,
                              const Eigen::Ref<const Vector>& v) {
  const auto& ma = phi.max_affine();
  const int m = static_cast<int>(ma.A.rows());
  if (m > 16) throw SolverError("prox(max_of_affine): more than 16 pieces not supported");

  const Vector fv = ma.A * v + ma.c;
  const double scale = 1.0 + fv.cwiseAbs().maxCoeff() + v.cwiseAbs().maxCoeff();
  double best_obj = std::numeric_limits<double>::infinity();
  Vector best_u;

  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> S;
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) S.push_back(j);
    const int n = static_cast<int>(S.size());

    Matrix As(n, phi.dim());
    Vector cs(n);
    for (int r = 0; r < n; ++r) {
      As.row(r) = ma.A.row(S[r]);
      cs[r] = ma.c[S[r]];
    }
    // [λ As Asᵀ, 1; 1ᵀ, 0] [θ; s] = [As v + cs; 1]
    Matrix K(n + 1, n + 1);
    K.topLeftCorner(n, n) = lambda * (As * As.transpose());
    K.topRightCorner(n, 1).setOnes();
    K.bottomLeftCorner(1, n).setOnes();
    K(n, n) = 0.0;
    Vector rhs(n + 1);
    rhs.head(n) = As * v + cs;
    rhs[n] = 1.0;
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector theta = sol.head(n);
    const double sval = sol[n];
    if ((theta.array() < -1e-11).any()) continue;
    const Vector u = v - lambda * (As.transpose() * theta);
    const double slack_tol = 1e-9 * scale;
    if (((ma.A * u + ma.c).array() > sval + slack_tol).any()) continue;
    const double obj = (ma.A * u + ma.c).maxCoeff() + (u - v).squaredNorm() / (2.0 * lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best_u = u;
    }
  }
  if (best_u.size() == 0) throw SolverError("prox(max_of_affine): no valid active set found");
  return best_u;
}

inline Vector prox_impl(const ConvexFunction& phi, double lambda,
                        const Eigen::Ref<const Vector>& v) {
  switch (phi.kind()) {
    case ConvexKind::Zero:
      return v;
    case ConvexKind::SeparableAbs: {
      Vector u(v.size());
      for (int i = 0; i < v.size(); ++i)
        u[i] = v[i] > lambda ? v[i] - lambda : (v[i] < -lambda ? v[i] + lambda : 0.0);
      return u;
    }
    case ConvexKind::EuclideanNorm: {
      const double n = v.norm();
      if (n <= lambda) return Vector::Zero(v.size());
      return v * (1.0 - lambda / n);
    }
    case ConvexKind::Quadratic: {
      const Matrix& Q = phi.quad().Q;
      Matrix M = Matrix::Identity(Q.rows(), Q.cols()) + lambda * Q;
      Eigen::LLT<Matrix> llt(M);
      if (llt.info() != Eigen::Success)
        throw SolverError("prox(quadratic): I + λQ not SPD (Q not PSD?)");
      return llt.solve(v);
    }
    case ConvexKind::IndicatorBox:
      return v.cwiseMax(phi.box().lo).cwiseMin(phi.box().hi);
    case ConvexKind::IndicatorBall: {
      const auto& b = phi.ball();
      const Vector r = v - b.center;
      const double n = r.norm();
      if (n <= b.radius) return v;
      return b.center + r * (b.radius / n);
    }
    case ConvexKind::IndicatorHalfspace: {
      const auto& h = phi.halfspace();
      const double ex = h.normal.dot(v) - h.offset;
      if (ex <= 0) return v;
      return v - h.normal * (ex / h.normal.squaredNorm());
    }
    case ConvexKind::MaxOfAffine:
      return prox_max_affine(phi, lambda, v);
    case ConvexKind::ScaledSum: {
      const auto& s = phi.sum();
      if (s.terms.size() == 1) return prox_impl(*s.terms[0], lambda * s.weights[0], v);
      if (phi.dim() == 1) {
        Vector u(1);
        u[0] = prox_1d_numeric(phi, lambda, v[0]);
        return u;
      }
      return prox_sum_admm(phi, lambda, v);
    }
  }
  throw std::logic_error("prox: unreachable");
}

}  // namespace detail

/// The proximal map (resolvent of λ∂φ): the unique minimizer of
/// φ(u) + |u−v|²/(2λ); equivalently (v−u)/λ ∈ ∂φ(u).
inline Vector prox(const ConvexFunction& phi, double lambda, const Eigen::Ref<const Vector>& v) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("prox: λ must be > 0");
  check_arg(phi, v, "prox");
  return detail::prox_impl(phi, lambda, v);
}

/// Moreau envelope φ_λ(v) = φ(prox(v)) + |v − prox(v)|²/(2λ).
inline double moreau_envelope(const ConvexFunction& phi, double lambda,
                              const Eigen::Ref<const Vector>& v) {
  const Vector u = prox(phi, lambda, v);
  const ExtendedReal val = eval(phi, u);
  if (!val.is_finite()) throw SolverError("moreau_envelope: prox point left Dom(φ)");
  return val.value() + (v - u).squaredNorm() / (2.0 * lambda);
}

/// Least-norm subgradient (∂φ)⁰(u) and its norm |∂φ|₀(u); (none, +∞) when
/// ∂φ(u) = ∅ (inf ∅ = +∞ convention).
struct MinimalSection {
  std::optional<Vector> vec;
  ExtendedReal norm = ExtendedReal::infinity();
};

inline MinimalSection minimal_section(const ConvexFunction& phi,
                                      const Eigen::Ref<const Vector>& u) {
  check_arg(phi, u, "minimal_section");
  if (!in_subdiff_domain(phi, u)) return {};
  MinimalSection out;
  switch (phi.kind()) {
    case ConvexKind::Zero:
      out.vec = Vector::Zero(phi.dim());
      break;
    case ConvexKind::SeparableAbs: {
      Vector g(u.size());
      for (int i = 0; i < u.size(); ++i) g[i] = u[i] > 0 ? 1.0 : (u[i] < 0 ? -1.0 : 0.0);
      out.vec = g;
      break;
    }
    case ConvexKind::EuclideanNorm: {
      const double n = u.norm();
      out.vec = n > 0 ? Vector(u / n) : Vector(Vector::Zero(phi.dim()));
      break;
    }
    case ConvexKind::Quadratic:
      out.vec = phi.quad().Q * u;
      break;
    case ConvexKind::IndicatorBox:
    case ConvexKind::IndicatorBall:
    case ConvexKind::IndicatorHalfspace:
      // 0 belongs to every normal cone N_C(u), u ∈ C.
      out.vec = Vector::Zero(phi.dim());
      break;
    case ConvexKind::MaxOfAffine: {
      // Least-norm point of conv{a_j : j active}: enumerate support sets of
      // the minimizing simplex weights.
      const auto& m = phi.max_affine();
      const Vector f = m.A * u + m.c;
      const double fmax = f.maxCoeff();
      std::vector<int> J;
      for (int j = 0; j < f.size(); ++j)
        if (f[j] >= fmax - detail::active_tol(fmax)) J.push_back(j);
      double best = std::numeric_limits<double>::infinity();
      Vector best_g;
      const int nact = static_cast<int>(J.size());
      for (unsigned mask = 1; mask < (1u << nact); ++mask) {
        std::vector<int> S;
        for (int j = 0; j < nact; ++j)
          if (mask & (1u << j)) S.push_back(J[j]);
        const int n = static_cast<int>(S.size());
        Matrix As(n, phi.dim());
        for (int r = 0; r < n; ++r) As.row(r) = m.A.row(S[r]);
        Matrix K(n + 1, n + 1);
        K.topLeftCorner(n, n) = As * As.transpose();
        K.topRightCorner(n, 1).setOnes();
        K.bottomLeftCorner(1, n).setOnes();
        K(n, n) = 0.0;
        Vector rhs = Vector::Zero(n + 1);
        rhs[n] = 1.0;
        Eigen::FullPivLU<Matrix> lu(K);
        if (!lu.isInvertible()) continue;
        const Vector theta = lu.solve(rhs).head(n);
        if ((theta.array() < -1e-11).any()) continue;
        const Vector g = As.transpose() * theta;
        if (g.norm() < best) {
          best = g.norm();
          best_g = g;
        }
      }
      out.vec = best_g;
      break;
    }
    case ConvexKind::ScaledSum: {
      // Limit characterization (∂φ)⁰(u) = lim_{λ↓0} (u − prox_λ(u))/λ, taken
      // at a small fixed λ; exact for polyhedral sums once λ is below the
      // activation scale, O(λ) error for smooth atoms.
      const double lam = 1e-7 * (1.0 + u.cwiseAbs().maxCoeff());
      const Vector w = prox(phi, lam, u);
      out.vec = (u - w) / lam;
      break;
    }
  }
  out.norm = out.vec->norm();
  return out;
}

/// Nearest practical representative of u in Dom(∂φ) (prox with a tiny λ);
/// identity whenever u already qualifies.
inline Vector project_subdiff_domain(const ConvexFunction& phi,
                                     const Eigen::Ref<const Vector>& u) {
  if (in_subdiff_domain(phi, u)) return u;
  return prox(phi, 1e-9 * (1.0 + u.cwiseAbs().maxCoeff()), u);
}

namespace detail {

template <bool Liminf>
ExtendedReal dir_deriv_limit_sampled(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                                     const Eigen::Ref<const Vector>& z,
                                     const std::vector<double>& radii, int n_samples,
                                     SampleStream stream) {
  if (radii.empty()) throw std::invalid_argument("dir_deriv_limit: empty radius list");
  for (std::size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] > radii[i + 1]) || !(radii[i + 1] > 0))
      throw std::invalid_argument("dir_deriv_limit: radii must be positive decreasing");

  const int k = phi.dim();
  ExtendedReal result = Liminf ? ExtendedReal::infinity() : ExtendedReal::neg_infinity();
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double r = radii[ri];
    std::vector<Vector> candidates;
    candidates.push_back(u);
    for (int i = 0; i < k; ++i) {
      Vector e = Vector::Zero(k);
      e[i] = r;
      candidates.push_back(u + e);
      candidates.push_back(u - e);
    }
    for (int s = 0; s < n_samples; ++s)
      candidates.push_back(u + (r * stream.uniform()) * stream.unit_vector(k));

    bool any = false;
    ExtendedReal extreme = Liminf ? ExtendedReal::infinity() : ExtendedReal::neg_infinity();
    for (const Vector& cand : candidates) {
      Vector w = project_subdiff_domain(phi, cand);
      if (!in_subdiff_domain(phi, w)) continue;
      if ((w - u).norm() > r * (1.0 + 1e-6) + 1e-12) continue;  // rejection step
      const ExtendedReal val = Liminf ? dd_minus(phi, w, z) : dd_plus(phi, w, z);
      extreme = Liminf ? min(extreme, val) : max(extreme, val);
      any = true;
    }
    if (any) {
      result = extreme;
    } else if (ri + 1 == radii.size()) {
      throw SolverError("dir_deriv_limit: no Dom(∂φ) sample found at the smallest radius");
    }
  }
  return result;
}

}  // namespace detail

inline std::vector<double> default_limit_radii() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

/// Sampled estimator of φ'_*(u;z) = liminf_{v→u, v∈Dom(∂φ)} φ'_−(v;z): per
/// radius, the minimum of φ'_− over projected samples of B(u, r) ∩ Dom(∂φ)
/// (the center and ±r·e_i deterministic, the rest random); the value at the
/// smallest radius is reported.
inline ExtendedReal dir_deriv_liminf_sampled(const ConvexFunction& phi,
                                             const Eigen::Ref<const Vector>& u,
                                             const Eigen::Ref<const Vector>& z,
                                             const std::vector<double>& radii, int n_samples,
                                             SampleStream stream) {
  return detail::dir_deriv_limit_sampled<true>(phi, u, z, radii, n_samples, stream);
}

/// Mirror of dir_deriv_liminf_sampled with the maximum of φ'_+ per radius.
inline ExtendedReal dir_deriv_limsup_sampled(const ConvexFunction& phi,
                                             const Eigen::Ref<const Vector>& u,
                                             const Eigen::Ref<const Vector>& z,
                                             const std::vector<double>& radii, int n_samples,
                                             SampleStream stream) {
  return detail::dir_deriv_limit_sampled<false>(phi, u, z, radii, n_samples, stream);
}

}  // namespace pvi
