#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "pvi/rng.hpp"
#include "pvi/types.hpp"

namespace pvi {

/// Uniform grid t_i = t_start + i·h on [t_start, T].
struct TimeGrid {
  double t_start = 0.0;
  double T = 1.0;
  int n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t_start_, double T_, int n_steps_)
      : t_start(t_start_), T(T_), n_steps(n_steps_) {
    if (!(t_start < T)) throw ConfigError("TimeGrid: needs t_start < T");
    if (n_steps < 1) throw ConfigError("TimeGrid: needs n_steps >= 1");
  }

  double h() const { return (T - t_start) / n_steps; }
  double node(int i) const { return t_start + i * h(); }
};

/// Drift b(t,x) and diffusion σ(t,x) from the registry of globally Lipschitz
/// coefficient kinds (zero / constant / affine drift; zero / constant /
/// diagonal-affine diffusion).  Time-independent by construction, so the
/// Lipschitz bound is uniform in t.
class CoefficientField {
public:
  enum class DriftKind { Zero, Constant, Affine };
  enum class SigmaKind { Zero, Constant, DiagonalAffine };

  static CoefficientField make(int d) {
    CoefficientField c;
    c.d_ = d;
    c.b_c_ = Vector::Zero(d);
    c.b_A_ = Matrix::Zero(d, d);
    c.s_M_ = Matrix::Zero(d, d);
    c.s_alpha_ = Vector::Zero(d);
    c.s_beta_ = Vector::Zero(d);
    return c;
  }

  CoefficientField& drift_zero() {
    b_kind_ = DriftKind::Zero;
    return *this;
  }
  CoefficientField& drift_constant(Vector c) {
    require_size(c.size(), "drift_constant");
    b_kind_ = DriftKind::Constant;
    b_c_ = std::move(c);
    return *this;
  }
  CoefficientField& drift_affine(Matrix A, Vector c) {
    require_size(A.rows(), "drift_affine");
    require_size(A.cols(), "drift_affine");
    require_size(c.size(), "drift_affine");
    b_kind_ = DriftKind::Affine;
    b_A_ = std::move(A);
    b_c_ = std::move(c);
    return *this;
  }
  CoefficientField& sigma_zero() {
    s_kind_ = SigmaKind::Zero;
    return *this;
  }
  CoefficientField& sigma_constant(Matrix M) {
    require_size(M.rows(), "sigma_constant");
    require_size(M.cols(), "sigma_constant");
    s_kind_ = SigmaKind::Constant;
    s_M_ = std::move(M);
    return *this;
  }
  /// σ(t,x) = diag(α_i x_i + β_i)
  CoefficientField& sigma_diagonal_affine(Vector alpha, Vector beta) {
    require_size(alpha.size(), "sigma_diagonal_affine");
    require_size(beta.size(), "sigma_diagonal_affine");
    s_kind_ = SigmaKind::DiagonalAffine;
    s_alpha_ = std::move(alpha);
    s_beta_ = std::move(beta);
    return *this;
  }

  int dim() const { return d_; }
  DriftKind drift_kind() const { return b_kind_; }
  SigmaKind sigma_kind() const { return s_kind_; }
  const Vector& drift_c() const { return b_c_; }
  const Matrix& drift_A() const { return b_A_; }
  const Matrix& sigma_M() const { return s_M_; }
  const Vector& sigma_alpha() const { return s_alpha_; }
  const Vector& sigma_beta() const { return s_beta_; }

  Vector drift_at(double /*t*/, const Eigen::Ref<const Vector>& x) const {
    switch (b_kind_) {
      case DriftKind::Zero: return Vector::Zero(d_);
      case DriftKind::Constant: return b_c_;
      case DriftKind::Affine: return b_A_ * x + b_c_;
    }
    throw std::logic_error("drift_at");
  }

  Matrix sigma_at(double /*t*/, const Eigen::Ref<const Vector>& x) const {
    switch (s_kind_) {
      case SigmaKind::Zero: return Matrix::Zero(d_, d_);
      case SigmaKind::Constant: return s_M_;
      case SigmaKind::DiagonalAffine: {
        Matrix m = Matrix::Zero(d_, d_);
        m.diagonal() = s_alpha_.cwiseProduct(x) + s_beta_;
        return m;
      }
    }
    throw std::logic_error("sigma_at");
  }

  /// One Euler increment applied to all paths: rows of `states` are x per
  /// path, rows of `dW` the Brownian increments; returns b·h + σ·dW rowwise.
  Matrix euler_increment(double t, const Eigen::Ref<const Matrix>& states,
                         const Eigen::Ref<const Matrix>& dW, double h) const {
    const auto n = states.rows();
    Matrix inc(n, d_);
    switch (b_kind_) {
      case DriftKind::Zero: inc.setZero(); break;
      case DriftKind::Constant: inc = b_c_.transpose().replicate(n, 1) * h; break;
      case DriftKind::Affine:
        inc = (states * b_A_.transpose() + b_c_.transpose().replicate(n, 1)) * h;
        break;
    }
    switch (s_kind_) {
      case SigmaKind::Zero: break;
      case SigmaKind::Constant: inc += dW * s_M_.transpose(); break;
      case SigmaKind::DiagonalAffine:
        inc += dW.cwiseProduct(states * s_alpha_.asDiagonal() +
                               s_beta_.transpose().replicate(n, 1));
        break;
    }
    (void)t;
    return inc;
  }

  /// A Lipschitz constant of (b, σ) in x, uniform in t.
  double lipschitz_constant() const {
    double lb = 0.0;
    if (b_kind_ == DriftKind::Affine) lb = b_A_.operatorNorm();
    double ls = 0.0;
    if (s_kind_ == SigmaKind::DiagonalAffine) ls = s_alpha_.cwiseAbs().maxCoeff();
    return std::max(lb, ls);
  }

  bool is_affine() const { return true; }  // every registry kind is

private:
  void require_size(Eigen::Index n, const char* who) const {
    if (n != d_) throw ConfigError(std::string(who) + ": dimension mismatch");
  }

  int d_ = 0;
  DriftKind b_kind_ = DriftKind::Zero;
  SigmaKind s_kind_ = SigmaKind::Zero;
  Vector b_c_;
  Matrix b_A_;
  Matrix s_M_;
  Vector s_alpha_, s_beta_;
};

/// Simulated forward paths with their Brownian increments.
///
/// Storage is step-major: `states` is n_paths × (n_steps+1)·d with the block
/// of step i in columns [i·d, (i+1)·d); `increments` likewise without the
/// terminal block.  Immutable once built.
struct PathEnsemble {
  TimeGrid grid;
  double origin_t = 0.0;
  Vector origin_x;
  std::uint64_t seed = 0;
  int n_paths = 0;
  Matrix states;
  Matrix increments;

  int dim() const { return static_cast<int>(origin_x.size()); }

  Eigen::Block<const Matrix> states_at(int step) const {
    return states.block(0, step * dim(), n_paths, dim());
  }
  Eigen::Block<const Matrix> increments_at(int step) const {
    return increments.block(0, step * dim(), n_paths, dim());
  }

  /// Path value at time s with the frozen-before-start convention: X_s = x
  /// for s ≤ t.  Off-node times round to the nearest grid node.
  Vector state_at_time(int path, double s) const {
    if (s <= origin_t) return origin_x;
    const int i = std::min(grid.n_steps,
                           std::max(0, static_cast<int>(std::lround((s - origin_t) / grid.h()))));
    return states_at(i).row(path).transpose();
  }
};

/// Euler–Maruyama simulation of dX = b dt + σ dW from (t, x).  Increments are
/// derived per (path, step) from the seed with a counter-based generator, so
/// the ensemble is bit-identical regardless of scheduling or worker count.
inline PathEnsemble simulate(const CoefficientField& coeffs,
                             std::pair<double, Vector> origin, const TimeGrid& grid,
                             int n_paths, std::uint64_t seed) {
  const auto& [t0, x0] = origin;
  const int d = coeffs.dim();
  if (x0.size() != d) throw ConfigError("simulate: origin dimension mismatch");
  if (std::abs(grid.t_start - t0) > 1e-12 * (1.0 + std::abs(t0)))
    throw ConfigError("simulate: grid must start at the origin time");
  if (n_paths < 1) throw ConfigError("simulate: n_paths must be >= 1");
  if (!x0.allFinite()) throw ConfigError("simulate: non-finite origin");

  PathEnsemble ens;
  ens.grid = grid;
  ens.origin_t = t0;
  ens.origin_x = x0;
  ens.seed = seed;
  ens.n_paths = n_paths;
  ens.states.resize(n_paths, (grid.n_steps + 1) * d);
  ens.increments.resize(n_paths, grid.n_steps * d);

  ens.states.leftCols(d) = x0.transpose().replicate(n_paths, 1);

  PathNormals normals(seed);
  const double h = grid.h();
  const double sqrt_h = std::sqrt(h);
  Eigen::RowVectorXd zrow(d);
  for (int i = 0; i < grid.n_steps; ++i) {
    auto dW = ens.increments.block(0, i * d, n_paths, d);
    for (int p = 0; p < n_paths; ++p) {
      normals.fill(static_cast<std::uint64_t>(p), static_cast<std::uint32_t>(i), zrow);
      dW.row(p) = sqrt_h * zrow;
    }
    const auto x_i = ens.states.block(0, i * d, n_paths, d);
    ens.states.block(0, (i + 1) * d, n_paths, d) =
        x_i + coeffs.euler_increment(grid.node(i), x_i, dW, h);
    if (!ens.states.block(0, (i + 1) * d, n_paths, d).allFinite())
      throw SolverError("simulate: non-finite state at step " + std::to_string(i + 1));
  }
  return ens;
}

/// Empirical E sup_s |X_s|^p against the polynomial-growth form C(1+|x|^p).
struct MomentReport {
  int p = 2;
  double sup_moment = 0.0;
  double ratio = 0.0;  // sup_moment / (1 + |x|^p)
};

inline MomentReport moment_check(const PathEnsemble& ens, int p) {
  if (p < 2 || p % 2 != 0) throw std::invalid_argument("moment_check: p must be even and >= 2");
  if (ens.n_paths < 1) throw std::invalid_argument("moment_check: empty ensemble");
  const int d = ens.dim();
  double acc = 0.0;
  for (int path = 0; path < ens.n_paths; ++path) {
    double sup_norm2 = 0.0;
    for (int i = 0; i <= ens.grid.n_steps; ++i)
      sup_norm2 = std::max(sup_norm2, ens.states.block(path, i * d, 1, d).squaredNorm());
    acc += std::pow(sup_norm2, p / 2.0);
  }
  MomentReport rep;
  rep.p = p;
  rep.sup_moment = acc / ens.n_paths;
  rep.ratio = rep.sup_moment / (1.0 + std::pow(ens.origin_x.norm(), p));
  return rep;
}

/// Moment-growth study across grid refinements: flags a ratio that keeps
/// growing as h ↓ 0 (the polynomial-growth bound has no h dependence).
struct MomentStudy {
  std::vector<MomentReport> reports;
  bool flagged = false;
};

inline MomentStudy moment_refinement_study(const CoefficientField& coeffs,
                                           std::pair<double, Vector> origin, double T,
                                           const std::vector<int>& steps, int n_paths,
                                           std::uint64_t seed, int p) {
  MomentStudy study;
  for (int n : steps) {
    const TimeGrid grid(origin.first, T, n);
    study.reports.push_back(moment_check(simulate(coeffs, origin, grid, n_paths, seed), p));
  }
  for (std::size_t i = 1; i < study.reports.size(); ++i)
    if (study.reports[i].ratio > 1.5 * study.reports[i - 1].ratio + 1e-12) study.flagged = true;
  return study;
}

}  // namespace pvi
