#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include "pvi/extended_real.hpp"
#include "pvi/rng.hpp"
#include "pvi/types.hpp"

namespace pvi {

// ---------------------------------------------------------------------------
// Registry of proper l.s.c. convex functions φ: R^k → (−∞, +∞].
//
// Convexity / properness / lower semicontinuity per kind:
//   Zero            φ ≡ 0: affine.
//   SeparableAbs    Σ|u_i|: sum of convex piecewise-linear pieces; finite.
//   EuclideanNorm   |u|: a norm; finite.
//   Quadratic       ½⟨Qu,u⟩ with Q symmetric PSD: convex by PSD; finite.
//   IndicatorBox    I_[a,b]: indicator of a closed convex set; proper when
//                   a ≤ b componentwise (the set is nonempty).
//   IndicatorBall   I_{|u−c|≤R}: closed ball, R > 0.
//   IndicatorHalfspace  I_{⟨n,u⟩≤c}, n ≠ 0: closed halfspace.
//   MaxOfAffine     max_j ⟨a_j,u⟩+c_j: max of affine maps; finite.
//   ScaledSum       Σ w_j φ_j, w_j > 0: convex l.s.c. as a positive
//                   combination; properness (a common finite point) is
//                   checked at construction by a feasibility search.
// ---------------------------------------------------------------------------

enum class ConvexKind {
  Zero,
  SeparableAbs,
  EuclideanNorm,
  Quadratic,
  IndicatorBox,
  IndicatorBall,
  IndicatorHalfspace,
  MaxOfAffine,
  ScaledSum,
};

inline const char* to_string(ConvexKind kind) {
  switch (kind) {
    case ConvexKind::Zero: return "zero";
    case ConvexKind::SeparableAbs: return "separable_abs";
    case ConvexKind::EuclideanNorm: return "euclidean_norm";
    case ConvexKind::Quadratic: return "quadratic";
    case ConvexKind::IndicatorBox: return "indicator_box";
    case ConvexKind::IndicatorBall: return "indicator_ball";
    case ConvexKind::IndicatorHalfspace: return "indicator_halfspace";
    case ConvexKind::MaxOfAffine: return "max_of_affine";
    case ConvexKind::ScaledSum: return "scaled_sum";
  }
  return "?";
}

class ConvexFunction;

namespace detail {

struct ZeroParams {};
struct AbsParams {};
struct NormParams {};
struct QuadParams {
  Matrix Q;
};
struct BoxParams {
  Vector lo, hi;  // entries may be ±inf (IEEE); bounds are parameters, not values
};
struct BallParams {
  Vector center;
  double radius;
};
struct HalfspaceParams {
  Vector normal;
  double offset;
};
struct MaxAffineParams {
  Matrix A;  // m × k, rows are the affine gradients a_j
  Vector c;  // m
};
struct SumParams {
  std::vector<double> weights;
  std::vector<std::shared_ptr<const ConvexFunction>> terms;
};

using ParamVariant = std::variant<ZeroParams, AbsParams, NormParams, QuadParams, BoxParams,
                                  BallParams, HalfspaceParams, MaxAffineParams, SumParams>;

}  // namespace detail

class ConvexFunction {
public:
  static ConvexFunction zero(int k) { return ConvexFunction(k, detail::ZeroParams{}); }

  static ConvexFunction separable_abs(int k) { return ConvexFunction(k, detail::AbsParams{}); }

  static ConvexFunction euclidean_norm(int k) { return ConvexFunction(k, detail::NormParams{}); }

  static ConvexFunction quadratic(Matrix Q) {
    if (Q.rows() != Q.cols()) throw ConfigError("quadratic: Q must be square");
    if (!Q.isApprox(Q.transpose(), 1e-12)) throw ConfigError("quadratic: Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff()))
      throw ConfigError("quadratic: Q must be positive semidefinite");
    return quadratic_unchecked(std::move(Q));
  }

  /// Test hook: accepts any symmetric Q, including indefinite ones, so that
  /// fault-injection tests can exercise the law-suite failure paths.
  static ConvexFunction quadratic_unchecked(Matrix Q) {
    const int k = static_cast<int>(Q.rows());
    Matrix sym = 0.5 * (Q + Q.transpose());
    return ConvexFunction(k, detail::QuadParams{std::move(sym)});
  }

  static ConvexFunction indicator_box(Vector lo, Vector hi) {
    if (lo.size() != hi.size()) throw ConfigError("indicator_box: bound sizes differ");
    for (int i = 0; i < lo.size(); ++i) {
      if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i])
        throw ConfigError("indicator_box: needs lo <= hi componentwise");
    }
    const int k = static_cast<int>(lo.size());
    return ConvexFunction(k, detail::BoxParams{std::move(lo), std::move(hi)});
  }

  static ConvexFunction indicator_ball(Vector center, double radius) {
    if (!(radius > 0) || !std::isfinite(radius)) throw ConfigError("indicator_ball: radius must be > 0");
    const int k = static_cast<int>(center.size());
    return ConvexFunction(k, detail::BallParams{std::move(center), radius});
  }

  static ConvexFunction indicator_halfspace(Vector normal, double offset) {
    if (normal.norm() == 0.0) throw ConfigError("indicator_halfspace: zero normal");
    const int k = static_cast<int>(normal.size());
    return ConvexFunction(k, detail::HalfspaceParams{std::move(normal), offset});
  }

  static ConvexFunction max_of_affine(Matrix A, Vector c) {
    if (A.rows() != c.size() || A.rows() == 0) throw ConfigError("max_of_affine: bad shapes");
    const int k = static_cast<int>(A.cols());
    return ConvexFunction(k, detail::MaxAffineParams{std::move(A), std::move(c)});
  }

  static ConvexFunction scaled_sum(std::vector<double> weights, std::vector<ConvexFunction> terms);

  int dim() const { return k_; }

  ConvexKind kind() const {
    return static_cast<ConvexKind>(params_.index());
  }

  bool is_indicator() const {
    const ConvexKind c = kind();
    return c == ConvexKind::IndicatorBox || c == ConvexKind::IndicatorBall ||
           c == ConvexKind::IndicatorHalfspace;
  }

  /// True when φ is piecewise linear (dir-derivative laws hold exactly in
  /// floating point); smooth/curved kinds get a small tolerance instead.
  bool piecewise_linear() const {
    switch (kind()) {
      case ConvexKind::Zero:
      case ConvexKind::SeparableAbs:
      case ConvexKind::IndicatorBox:
      case ConvexKind::IndicatorHalfspace:
      case ConvexKind::MaxOfAffine:
        return true;
      case ConvexKind::ScaledSum: {
        for (const auto& t : sum().terms)
          if (!t->piecewise_linear()) return false;
        return true;
      }
      default:
        return false;
    }
  }

  const detail::QuadParams& quad() const { return std::get<detail::QuadParams>(params_); }
  const detail::BoxParams& box() const { return std::get<detail::BoxParams>(params_); }
  const detail::BallParams& ball() const { return std::get<detail::BallParams>(params_); }
  const detail::HalfspaceParams& halfspace() const { return std::get<detail::HalfspaceParams>(params_); }
  const detail::MaxAffineParams& max_affine() const { return std::get<detail::MaxAffineParams>(params_); }
  const detail::SumParams& sum() const { return std::get<detail::SumParams>(params_); }

private:
  ConvexFunction(int k, detail::ParamVariant p) : k_(k), params_(std::move(p)) {
    if (k_ < 1) throw ConfigError("ConvexFunction: dimension must be >= 1");
  }

  int k_;
  detail::ParamVariant params_;
};

// --------------------------------------------------------------------------
// Evaluation and domains
// --------------------------------------------------------------------------

namespace detail {

// Membership slack for curved/affine boundaries: projections land on the
// boundary only up to rounding.  Box membership stays exact (clamping is).
inline double membership_slack(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

}  // namespace detail

inline void check_arg(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                      const char* who) {
  if (u.size() != phi.dim()) {
    std::ostringstream os;
    os << who << ": argument size " << u.size() << " != k = " << phi.dim();
    throw std::invalid_argument(os.str());
  }
  if (!u.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite argument");
}

/// φ(u).  Returns +∞ exactly when u ∉ Dom(φ).
inline ExtendedReal eval(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u) {
  check_arg(phi, u, "eval");
  switch (phi.kind()) {
    case ConvexKind::Zero:
      return 0.0;
    case ConvexKind::SeparableAbs:
      return u.cwiseAbs().sum();
    case ConvexKind::EuclideanNorm:
      return u.norm();
    case ConvexKind::Quadratic:
      return 0.5 * u.dot(phi.quad().Q * u);
    case ConvexKind::IndicatorBox: {
      const auto& b = phi.box();
      for (int i = 0; i < u.size(); ++i)
        if (u[i] < b.lo[i] || u[i] > b.hi[i]) return ExtendedReal::infinity();
      return 0.0;
    }
    case ConvexKind::IndicatorBall: {
      const auto& b = phi.ball();
      const double r = (u - b.center).norm();
      return r <= b.radius + detail::membership_slack(b.radius) ? ExtendedReal(0.0)
                                                                : ExtendedReal::infinity();
    }
    case ConvexKind::IndicatorHalfspace: {
      const auto& h = phi.halfspace();
      const double s = h.normal.dot(u);
      const double slack = detail::membership_slack(std::abs(h.offset) + h.normal.norm() * u.norm());
      return s <= h.offset + slack ? ExtendedReal(0.0) : ExtendedReal::infinity();
    }
    case ConvexKind::MaxOfAffine: {
      const auto& m = phi.max_affine();
      return (m.A * u + m.c).maxCoeff();
    }
    case ConvexKind::ScaledSum: {
      const auto& s = phi.sum();
      ExtendedReal acc = 0.0;
      for (std::size_t j = 0; j < s.terms.size(); ++j) acc = acc + s.weights[j] * eval(*s.terms[j], u);
      return acc;
    }
  }
  throw std::logic_error("eval: unreachable");
}

inline bool in_domain(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u) {
  return eval(phi, u).is_finite();
}

/// Membership in Dom(∂φ).  For every registry kind Dom(∂φ) = Dom(φ): the
/// finite kinds are subdifferentiable everywhere and the indicator of a
/// closed convex set has a nonempty normal cone at each of its points.  For
/// ScaledSum this relies on the standard constraint qualification (a common
/// relative-interior point), which the built-in combinations satisfy.
inline bool in_subdiff_domain(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u) {
  return in_domain(phi, u);
}

namespace detail {
Vector domain_point_impl(const ConvexFunction& phi);
}

/// Some point of Dom(φ); throws ConfigError when the feasibility search for a
/// ScaledSum finds none (improper sum).
inline Vector domain_point(const ConvexFunction& phi) { return detail::domain_point_impl(phi); }

// --------------------------------------------------------------------------
// One-sided directional derivatives
//
// φ'_+(u;z) = inf_{t>0} (φ(u+tz) − φ(u))/t  and  φ'_−(u;z) = sup_{t<0} (...),
// both requiring u ∈ Dom(φ).  Closed forms per kind; each side is written out
// independently so the involution φ'_−(u;−z) = −φ'_+(u;z) is a testable law,
// not an identity of the implementation.
// --------------------------------------------------------------------------

namespace detail {

inline double active_tol(double fmax) { return 1e-11 * (1.0 + std::abs(fmax)); }

// Feasibility of moving from u in direction z within a box (strictness at the
// touched bound decides between 0 and ±∞).
inline bool box_forward_feasible(const BoxParams& b, const Eigen::Ref<const Vector>& u,
                                 const Eigen::Ref<const Vector>& z) {
  for (int i = 0; i < u.size(); ++i) {
    if (z[i] > 0 && !(u[i] < b.hi[i])) return false;
    if (z[i] < 0 && !(u[i] > b.lo[i])) return false;
  }
  return true;
}

inline bool box_backward_feasible(const BoxParams& b, const Eigen::Ref<const Vector>& u,
                                  const Eigen::Ref<const Vector>& z) {
  for (int i = 0; i < u.size(); ++i) {
    if (z[i] > 0 && !(u[i] > b.lo[i])) return false;
    if (z[i] < 0 && !(u[i] < b.hi[i])) return false;
  }
  return true;
}

inline bool ball_on_boundary(const BallParams& b, const Eigen::Ref<const Vector>& u) {
  return (u - b.center).norm() >= b.radius - membership_slack(b.radius);
}

ExtendedReal dd_impl(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                     const Eigen::Ref<const Vector>& z, bool plus_side);

}  // namespace detail

/// φ'_+(u;z).  Requires u ∈ Dom(φ).
inline ExtendedReal dd_plus(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                            const Eigen::Ref<const Vector>& z) {
  return detail::dd_impl(phi, u, z, true);
}

/// φ'_−(u;z).  Requires u ∈ Dom(φ).
inline ExtendedReal dd_minus(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                             const Eigen::Ref<const Vector>& z) {
  return detail::dd_impl(phi, u, z, false);
}

namespace detail {

inline ExtendedReal dd_impl(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                            const Eigen::Ref<const Vector>& z, bool plus_side) {
  check_arg(phi, u, "dir_deriv");
  check_arg(phi, z, "dir_deriv(z)");
  switch (phi.kind()) {
    case ConvexKind::Zero:
      return 0.0;
    case ConvexKind::SeparableAbs: {
      double acc = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        if (u[i] > 0)
          acc += z[i];
        else if (u[i] < 0)
          acc -= z[i];
        else
          acc += plus_side ? std::abs(z[i]) : -std::abs(z[i]);
      }
      return acc;
    }
    case ConvexKind::EuclideanNorm: {
      const double n = u.norm();
      if (n > 0) return u.dot(z) / n;
      return plus_side ? z.norm() : -z.norm();
    }
    case ConvexKind::Quadratic:
      return (phi.quad().Q * u).dot(z);
    case ConvexKind::IndicatorBox: {
      const auto& b = phi.box();
      if (!in_domain(phi, u)) throw std::domain_error("dir_deriv: u outside Dom(φ)");
      if (plus_side)
        return box_forward_feasible(b, u, z) ? ExtendedReal(0.0) : ExtendedReal::infinity();
      return box_backward_feasible(b, u, z) ? ExtendedReal(0.0) : ExtendedReal::neg_infinity();
    }
    case ConvexKind::IndicatorBall: {
      const auto& b = phi.ball();
      if (!in_domain(phi, u)) throw std::domain_error("dir_deriv: u outside Dom(φ)");
      if (!ball_on_boundary(b, u)) return 0.0;
      const double g = (u - b.center).dot(z);
      // On the curved boundary only strictly inward moves stay feasible; the
      // inward/outward sign carries cancellation noise when z connects two
      // near-boundary points, hence the relative slack.
      const double slack = membership_slack(b.radius * z.norm());
      if (z.norm() == 0.0) return 0.0;
      if (plus_side) return g < slack ? ExtendedReal(0.0) : ExtendedReal::infinity();
      return g > -slack ? ExtendedReal(0.0) : ExtendedReal::neg_infinity();
    }
    case ConvexKind::IndicatorHalfspace: {
      const auto& h = phi.halfspace();
      if (!in_domain(phi, u)) throw std::domain_error("dir_deriv: u outside Dom(φ)");
      const double s = h.normal.dot(u);
      const bool boundary =
          s >= h.offset - membership_slack(std::abs(h.offset) + h.normal.norm() * u.norm());
      if (!boundary) return 0.0;
      const double g = h.normal.dot(z);
      const double slack = membership_slack(h.normal.norm() * z.norm());
      if (plus_side) return g <= slack ? ExtendedReal(0.0) : ExtendedReal::infinity();
      return g >= -slack ? ExtendedReal(0.0) : ExtendedReal::neg_infinity();
    }
    case ConvexKind::MaxOfAffine: {
      const auto& m = phi.max_affine();
      const Vector f = m.A * u + m.c;
      const double fmax = f.maxCoeff();
      const double tol = active_tol(fmax);
      double best = plus_side ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
      for (int j = 0; j < f.size(); ++j) {
        if (f[j] >= fmax - tol) {
          const double g = m.A.row(j).dot(z);
          best = plus_side ? std::max(best, g) : std::min(best, g);
        }
      }
      return best;
    }
    case ConvexKind::ScaledSum: {
      const auto& s = phi.sum();
      // Per side the atom derivatives cannot mix +∞ and −∞: on Dom(φ) every
      // atom has φ'_+ ∈ R ∪ {+∞} and φ'_− ∈ R ∪ {−∞}.
      ExtendedReal acc = 0.0;
      for (std::size_t j = 0; j < s.terms.size(); ++j)
        acc = acc + s.weights[j] * dd_impl(*s.terms[j], u, z, plus_side);
      return acc;
    }
  }
  throw std::logic_error("dir_deriv: unreachable");
}

inline Vector domain_point_impl(const ConvexFunction& phi) {
  switch (phi.kind()) {
    case ConvexKind::Zero:
    case ConvexKind::SeparableAbs:
    case ConvexKind::EuclideanNorm:
    case ConvexKind::Quadratic:
    case ConvexKind::MaxOfAffine:
      return Vector::Zero(phi.dim());
    case ConvexKind::IndicatorBox: {
      const auto& b = phi.box();
      Vector p(phi.dim());
      for (int i = 0; i < p.size(); ++i) {
        const bool lo_f = std::isfinite(b.lo[i]);
        const bool hi_f = std::isfinite(b.hi[i]);
        if (lo_f && hi_f)
          p[i] = 0.5 * (b.lo[i] + b.hi[i]);
        else if (lo_f)
          p[i] = b.lo[i];
        else if (hi_f)
          p[i] = b.hi[i];
        else
          p[i] = 0.0;
      }
      return p;
    }
    case ConvexKind::IndicatorBall:
      return phi.ball().center;
    case ConvexKind::IndicatorHalfspace: {
      const auto& h = phi.halfspace();
      return h.normal * ((h.offset - 1.0) / h.normal.squaredNorm());
    }
    case ConvexKind::ScaledSum: {
      const auto& s = phi.sum();
      std::vector<Vector> candidates;
      candidates.push_back(Vector::Zero(phi.dim()));
      for (const auto& t : s.terms) candidates.push_back(domain_point_impl(*t));
      // Alternating projections onto the indicator atoms, started from the
      // candidate average, to find a common point when 0 is infeasible.
      Vector avg = Vector::Zero(phi.dim());
      for (const auto& c : candidates) avg += c;
      avg /= static_cast<double>(candidates.size());
      candidates.push_back(avg);
      for (auto& cand : candidates) {
        Vector x = cand;
        for (int round = 0; round < 64 && !in_domain(phi, x); ++round) {
          for (std::size_t j = 0; j < s.terms.size(); ++j) {
            const auto& t = *s.terms[j];
            if (!t.is_indicator()) continue;
            if (!in_domain(t, x)) {
              // projection = prox of an indicator; inline per kind to avoid
              // the prox header dependency
              switch (t.kind()) {
                case ConvexKind::IndicatorBox:
                  x = x.cwiseMax(t.box().lo).cwiseMin(t.box().hi);
                  break;
                case ConvexKind::IndicatorBall: {
                  const auto& b = t.ball();
                  const Vector r = x - b.center;
                  const double n = r.norm();
                  if (n > b.radius) x = b.center + r * (b.radius / n);
                  break;
                }
                case ConvexKind::IndicatorHalfspace: {
                  const auto& hs = t.halfspace();
                  const double ex = hs.normal.dot(x) - hs.offset;
                  if (ex > 0) x -= hs.normal * (ex / hs.normal.squaredNorm());
                  break;
                }
                default:
                  break;
              }
            }
          }
        }
        if (in_domain(phi, x)) return x;
      }
      throw ConfigError("scaled_sum: no common domain point found (improper sum)");
    }
  }
  throw std::logic_error("domain_point: unreachable");
}

}  // namespace detail

inline ConvexFunction ConvexFunction::scaled_sum(std::vector<double> weights,
                                                 std::vector<ConvexFunction> terms) {
  if (weights.size() != terms.size() || terms.empty())
    throw ConfigError("scaled_sum: needs matching, nonempty weights/terms");
  const int k = terms.front().dim();
  detail::SumParams p;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (terms[j].dim() != k) throw ConfigError("scaled_sum: mixed dimensions");
    if (!(weights[j] > 0) || !std::isfinite(weights[j]))
      throw ConfigError("scaled_sum: weights must be positive finite");
    p.weights.push_back(weights[j]);
    p.terms.push_back(std::make_shared<const ConvexFunction>(std::move(terms[j])));
  }
  ConvexFunction f(k, std::move(p));
  detail::domain_point_impl(f);  // properness: a common finite point must exist
  return f;
}

// --------------------------------------------------------------------------
// Directional-derivative operation surface
// --------------------------------------------------------------------------

enum class Side { minus, plus };

struct DirDerivResult {
  ExtendedReal value;
  enum class Method { closed_form, limit_sequence } method = Method::closed_form;
  std::vector<double> t_sequence;  // step sizes used when method == limit_sequence
};

/// Difference-quotient evaluation on the geometric sequence t0·ρ^i.  By the
/// monotonicity of the convex difference quotient the sequence is monotone
/// (nonincreasing toward φ'_+ as t ↓ 0, nondecreasing toward φ'_− as t ↑ 0);
/// the reported value is the final element of the monotone prefix — the first
/// wrong-way move marks the point where floating-point cancellation in
/// φ(u+tz) − φ(u) takes over, and the tail past it is noise.
inline DirDerivResult dir_deriv_numeric(const ConvexFunction& phi,
                                        const Eigen::Ref<const Vector>& u,
                                        const Eigen::Ref<const Vector>& z, Side side,
                                        double t0 = 1.0, double rho = 0.5, int n_steps = 40) {
  const ExtendedReal phi_u = eval(phi, u);
  if (!phi_u.is_finite()) throw std::domain_error("dir_deriv: u outside Dom(φ)");
  DirDerivResult res;
  res.method = DirDerivResult::Method::limit_sequence;
  const double sign = side == Side::plus ? 1.0 : -1.0;
  ExtendedReal quotient = side == Side::plus ? ExtendedReal::infinity() : ExtendedReal::neg_infinity();
  double t = t0;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int i = 0; i < n_steps; ++i, t *= rho) {
    const ExtendedReal q = (eval(phi, u + (sign * t) * z) - phi_u) / (sign * t);
    const bool monotone = side == Side::plus ? q <= quotient : q >= quotient;
    if (!monotone) break;
    const bool still_moving = side == Side::plus ? q < quotient : q > quotient;
    const ExtendedReal prev = quotient;
    res.t_sequence.push_back(sign * t);
    quotient = q;
    // Divergence guard: declare the infinite limit once the quotient passes
    // ±1e12 while still moving strictly in the monotone direction.
    if (q.is_finite() && still_moving) {
      if (side == Side::minus && q.value() > 1e12) {
        res.value = ExtendedReal::infinity();
        return res;
      }
      if (side == Side::plus && q.value() < -1e12) {
        res.value = ExtendedReal::neg_infinity();
        return res;
      }
    }
    // Converged once the per-step move drops to the cancellation noise of
    // φ(u+tz) − φ(u); smaller steps only add roundoff.
    if (q.is_finite() && prev.is_finite()) {
      const double phi_t = phi_u.value() + q.value() * (sign * t);
      const double noise = 16.0 * kEps * (std::abs(phi_u.value()) + std::abs(phi_t)) / t;
      if (std::abs(q.value() - prev.value()) <= noise) break;
    }
  }
  res.value = quotient;
  return res;
}

/// φ'_−(u;z) or φ'_+(u;z); closed form for every registry kind.
inline DirDerivResult dir_deriv(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                                const Eigen::Ref<const Vector>& z, Side side) {
  if (!in_domain(phi, u)) throw std::domain_error("dir_deriv: u outside Dom(φ)");
  DirDerivResult res;
  res.value = side == Side::plus ? dd_plus(phi, u, z) : dd_minus(phi, u, z);
  return res;
}

/// ∂φ(u) for k = 1 as the interval R ∩ [φ'_−(u), φ'_+(u)] (Eq-style
/// left/right derivatives); the set is empty exactly when the intersection is.
inline std::pair<ExtendedReal, ExtendedReal> subdiff_interval_1d(const ConvexFunction& phi,
                                                                 double u) {
  if (phi.dim() != 1) throw std::invalid_argument("subdiff_interval_1d: k must be 1");
  Vector uu(1), zz(1);
  uu[0] = u;
  zz[0] = 1.0;
  if (!in_domain(phi, uu)) throw std::domain_error("subdiff_interval_1d: u outside Dom(φ)");
  return {dd_minus(phi, uu, zz), dd_plus(phi, uu, zz)};
}

// --------------------------------------------------------------------------
// Subdifferential membership tests
// --------------------------------------------------------------------------

/// Deterministic ±e_i followed by seeded random unit directions.
struct DirectionSampler {
  int n_random = 32;
  std::uint64_t seed = 0;

  std::vector<Vector> directions(int k) const {
    std::vector<Vector> dirs;
    dirs.reserve(2 * k + n_random);
    for (int i = 0; i < k; ++i) {
      Vector e = Vector::Zero(k);
      e[i] = 1.0;
      dirs.push_back(e);
      dirs.push_back(-e);
    }
    SampleStream stream(seed, 0x5a11ed);
    for (int i = 0; i < n_random; ++i) dirs.push_back(stream.unit_vector(k));
    return dirs;
  }
};

/// Sampled test of u* ∈ ∂φ(u) via the one-sided derivative characterization:
/// u* is a subgradient iff ⟨u*, z⟩ ≥ φ'_−(u;z) for all z.
inline bool subdiff_contains(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                             const Eigen::Ref<const Vector>& u_star,
                             const DirectionSampler& sampler, double tol) {
  if (!in_domain(phi, u)) throw std::domain_error("subdiff_contains: u outside Dom(φ)");
  for (const Vector& z : sampler.directions(phi.dim())) {
    const ExtendedReal lower = dd_minus(phi, u, z);
    if (ExtendedReal(u_star.dot(z)) < lower - ExtendedReal(tol)) return false;
  }
  return true;
}

/// Sampled test of the defining subgradient inequality
/// ⟨u*, y−u⟩ + φ(u) ≤ φ(y), with y = u + r·z over the direction sampler and a
/// fixed radius ladder.
inline bool subdiff_contains_definitional(const ConvexFunction& phi,
                                          const Eigen::Ref<const Vector>& u,
                                          const Eigen::Ref<const Vector>& u_star,
                                          const DirectionSampler& sampler, double tol) {
  const ExtendedReal phi_u = eval(phi, u);
  if (!phi_u.is_finite()) throw std::domain_error("subdiff_contains: u outside Dom(φ)");
  static const double radii[] = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  for (const Vector& z : sampler.directions(phi.dim())) {
    for (double r : radii) {
      const Vector y = u + r * z;
      const ExtendedReal rhs = eval(phi, y) + ExtendedReal(tol);
      if (ExtendedReal(u_star.dot(y - u)) + phi_u > rhs) return false;
    }
  }
  return true;
}

// --------------------------------------------------------------------------
// φ'_* and φ'^* (liminf / limsup of the one-sided derivatives over
// Dom(∂φ)-approaching points), closed forms.
//
// For every registry kind the map v ↦ φ'_−(v;z) restricted to Dom(∂φ) is
// lower semicontinuous and attains its local minimum at the point itself, so
// the liminf collapses to φ'_−(u;z); dually φ'^* = φ'_+.  (Finite kinds: the
// quotient sup/inf representations give semicontinuity and the radial limits
// give attainment; indicator kinds: checked per kind from the normal-cone
// geometry.)  These are the overrides used by the viscosity checker; the
// sampled estimators live next to prox (they need domain projections).
// --------------------------------------------------------------------------

inline ExtendedReal dir_deriv_liminf(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                                     const Eigen::Ref<const Vector>& z) {
  if (!in_domain(phi, u)) throw std::domain_error("dir_deriv_liminf: u outside Dom(φ)");
  return dd_minus(phi, u, z);
}

inline ExtendedReal dir_deriv_limsup(const ConvexFunction& phi, const Eigen::Ref<const Vector>& u,
                                     const Eigen::Ref<const Vector>& z) {
  if (!in_domain(phi, u)) throw std::domain_error("dir_deriv_limsup: u outside Dom(φ)");
  return dd_plus(phi, u, z);
}

}  // namespace pvi
