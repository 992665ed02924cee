#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pvi/convex.hpp"
#include "pvi/prox.hpp"
#include "pvi/sde.hpp"

namespace pvi {

/// Driver f(t,x,y) of the backward equation.  Every kind satisfies the
/// one-sided Lipschitz bound ⟨y−ỹ, f(t,x,y)−f(t,x,ỹ)⟩ ≤ γ|y−ỹ|² by
/// construction: the y-independent kinds with γ = 0, the linear kinds with
/// their coefficient.
class Generator {
public:
  enum class Kind { Zero, Constant, LinearY, SeparableAffine };

  static Generator zero(int k) { return Generator(Kind::Zero, k, 0.0); }
  static Generator constant(Vector c) {
    Generator g(Kind::Constant, static_cast<int>(c.size()), 0.0);
    g.c_ = std::move(c);
    return g;
  }
  static Generator linear_y(int k, double gamma) { return Generator(Kind::LinearY, k, gamma); }
  /// f(t,x,y) = G·x + g0 + γ·y
  static Generator separable_affine(Matrix G, Vector g0, double gamma) {
    if (G.rows() != g0.size()) throw ConfigError("generator: G/g0 shape mismatch");
    Generator g(Kind::SeparableAffine, static_cast<int>(g0.size()), gamma);
    g.G_ = std::move(G);
    g.c_ = std::move(g0);
    return g;
  }

  Kind kind() const { return kind_; }
  int output_dim() const { return k_; }
  double gamma() const { return gamma_; }
  bool depends_on_y() const { return gamma_ != 0.0; }
  const Matrix& G() const { return G_; }
  const Vector& c() const { return c_; }

  /// Rowwise f over an ensemble block: states n×d, y n×k → n×k.
  Matrix eval(double /*t*/, const Eigen::Ref<const Matrix>& states,
              const Eigen::Ref<const Matrix>& y) const {
    const auto n = y.rows();
    switch (kind_) {
      case Kind::Zero:
        return Matrix::Zero(n, k_);
      case Kind::Constant:
        return c_.transpose().replicate(n, 1);
      case Kind::LinearY:
        return gamma_ * y;
      case Kind::SeparableAffine:
        return states * G_.transpose() + c_.transpose().replicate(n, 1) + gamma_ * y;
    }
    throw std::logic_error("Generator::eval");
  }

  Vector eval_at(double t, const Eigen::Ref<const Vector>& x,
                 const Eigen::Ref<const Vector>& y) const {
    return eval(t, x.transpose(), y.transpose()).row(0).transpose();
  }

private:
  Generator(Kind kind, int k, double gamma) : kind_(kind), k_(k), gamma_(gamma) {
    if (k < 1) throw ConfigError("generator: k must be >= 1");
  }
  Kind kind_;
  int k_;
  double gamma_;
  Matrix G_;
  Vector c_;
};

/// Terminal condition h: R^d → R^k with a computed polynomial-growth
/// certificate |h(x)| ≤ M1 (1 + |x|^p).
class TerminalMap {
public:
  enum class Kind { QuadraticForm, PositivePartAffine, Norm };

  /// h_i(x) = c0_i + ⟨c1_i, x⟩ + xᵀ C2_i x
  static TerminalMap quadratic_form(std::vector<double> c0, std::vector<Vector> c1,
                                    std::vector<Matrix> C2) {
    if (c0.empty() || c0.size() != c1.size() || c0.size() != C2.size())
      throw ConfigError("terminal: component count mismatch");
    TerminalMap t;
    t.kind_ = Kind::QuadraticForm;
    t.k_ = static_cast<int>(c0.size());
    t.d_ = static_cast<int>(c1[0].size());
    t.c0_ = std::move(c0);
    t.c1_ = std::move(c1);
    t.C2_ = std::move(C2);
    bool quad = false, lin = false;
    double m1sq = 0.0;
    for (int i = 0; i < t.k_; ++i) {
      if (t.c1_[i].size() != t.d_ || t.C2_[i].rows() != t.d_ || t.C2_[i].cols() != t.d_)
        throw ConfigError("terminal: component dimension mismatch");
      if (t.C2_[i].cwiseAbs().maxCoeff() > 0) quad = true;
      if (t.c1_[i].cwiseAbs().maxCoeff() > 0) lin = true;
      const double comp =
          std::abs(t.c0_[i]) + t.c1_[i].norm() + t.C2_[i].operatorNorm();
      m1sq += comp * comp;
    }
    t.p_ = quad ? 2 : (lin ? 1 : 0);
    t.M1_ = std::sqrt(m1sq);
    return t;
  }

  /// h_i(x) = max(⟨a_i, x⟩ + c_i, 0)
  static TerminalMap positive_part_affine(Matrix A, Vector c) {
    if (A.rows() != c.size() || A.rows() == 0) throw ConfigError("terminal: bad shapes");
    TerminalMap t;
    t.kind_ = Kind::PositivePartAffine;
    t.k_ = static_cast<int>(A.rows());
    t.d_ = static_cast<int>(A.cols());
    double m1sq = 0.0;
    for (int i = 0; i < t.k_; ++i) {
      const double comp = std::abs(c[i]) + A.row(i).norm();
      m1sq += comp * comp;
    }
    t.A_ = std::move(A);
    t.c0v_ = std::move(c);
    t.p_ = 1;
    t.M1_ = std::sqrt(m1sq);
    return t;
  }

  /// h(x) = |x| (k = 1)
  static TerminalMap norm(int d) {
    TerminalMap t;
    t.kind_ = Kind::Norm;
    t.k_ = 1;
    t.d_ = d;
    t.p_ = 1;
    t.M1_ = 1.0;
    return t;
  }

  Kind kind() const { return kind_; }
  int output_dim() const { return k_; }
  int input_dim() const { return d_; }
  int growth_exponent() const { return p_; }
  double growth_constant() const { return M1_; }

  Matrix eval(const Eigen::Ref<const Matrix>& states) const {
    const auto n = states.rows();
    Matrix out(n, k_);
    switch (kind_) {
      case Kind::QuadraticForm:
        for (int i = 0; i < k_; ++i) {
          out.col(i).setConstant(c0_[i]);
          out.col(i) += states * c1_[i];
          out.col(i) += ((states * C2_[i]).cwiseProduct(states)).rowwise().sum();
        }
        break;
      case Kind::PositivePartAffine:
        out = (states * A_.transpose() + c0v_.transpose().replicate(n, 1)).cwiseMax(0.0);
        break;
      case Kind::Norm:
        out.col(0) = states.rowwise().norm();
        break;
    }
    return out;
  }

  Vector eval_at(const Eigen::Ref<const Vector>& x) const {
    return eval(x.transpose()).row(0).transpose();
  }

private:
  Kind kind_ = Kind::Norm;
  int k_ = 1, d_ = 1, p_ = 1;
  double M1_ = 1.0;
  std::vector<double> c0_;
  std::vector<Vector> c1_;
  std::vector<Matrix> C2_;
  Matrix A_;
  Vector c0v_;
};

/// Polynomial regression basis of a given total degree; the effective degree
/// drops automatically when the design matrix is rank deficient.
struct RegressionBasis {
  int degree = 3;
};

struct SolveOptions {
  bool implicit_f = false;   // fixed-point iteration in the f term
  double fp_tol = 1e-14;
  int fp_max_iter = 200;
  bool apply_prox = true;    // disabled only by the φ=Zero reduction test
  double winsor_quantile = 0.999;
};

/// Discrete (Y, Z, U) triple on the ensemble grid.  Step-major storage like
/// PathEnsemble: Y has n_steps+1 blocks of k columns, Z n_steps blocks of k·d
/// (component-major: (a,b) ↦ a·d+b), U n_steps blocks of k.
struct BsvTriple {
  TimeGrid grid;
  int n_paths = 0, d = 0, k = 0;
  Matrix Y, Z, U;
  std::vector<std::string> warnings;

  Eigen::Block<const Matrix> Y_at(int step) const { return Y.block(0, step * k, n_paths, k); }
  Eigen::Block<const Matrix> Z_at(int step) const {
    return Z.block(0, step * k * d, n_paths, k * d);
  }
  Eigen::Block<const Matrix> U_at(int step) const { return U.block(0, step * k, n_paths, k); }
};

namespace detail {

// Exponent multi-indices of total degree <= D over d variables.
inline std::vector<std::vector<int>> monomial_exponents(int d, int D) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(d, 0);
  // iterate lexicographically over all tuples with sum <= D
  for (;;) {
    out.push_back(cur);
    int i = d - 1;
    for (; i >= 0; --i) {
      ++cur[i];
      int sum = 0;
      for (int v : cur) sum += v;
      if (sum <= D) break;
      cur[i] = 0;
    }
    if (i < 0) break;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int v : a) sa += v;
    for (int v : b) sb += v;
    if (sa != sb) return sa < sb;
    return a < b;
  });
  return out;
}

// Winsorized and standardized copy of a state block, for design conditioning.
inline Matrix condition_states(const Eigen::Ref<const Matrix>& states, double quantile) {
  const auto n = states.rows();
  const auto d = states.cols();
  Matrix out = states;
  for (int j = 0; j < d; ++j) {
    std::vector<double> col(states.col(j).data(), states.col(j).data() + n);
    std::sort(col.begin(), col.end());
    const auto qi = [&](double q) {
      const auto idx = static_cast<std::size_t>(q * (static_cast<double>(n) - 1));
      return col[std::min(idx, col.size() - 1)];
    };
    const double lo = qi(1.0 - quantile);
    const double hi = qi(quantile);
    out.col(j) = out.col(j).cwiseMax(lo).cwiseMin(hi);
    const double mean = out.col(j).mean();
    const double var = (out.col(j).array() - mean).square().sum() / std::max<double>(1, n - 1);
    const double sd = std::sqrt(var);
    const double scale = sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : 1.0;
    out.col(j) = (out.col(j).array() - mean) / scale;
  }
  return out;
}

struct DesignMatrix {
  Matrix phi;
  Eigen::ColPivHouseholderQR<Matrix> qr;
  int degree_used = 0;
};

inline DesignMatrix build_design(const Eigen::Ref<const Matrix>& states, int degree,
                                 double winsor_quantile, std::vector<std::string>* warnings,
                                 int step) {
  const Matrix cond = condition_states(states, winsor_quantile);
  const auto n = cond.rows();
  const int d = static_cast<int>(cond.cols());
  for (int D = degree; D >= 0; --D) {
    const auto exps = monomial_exponents(d, D);
    Matrix phi(n, exps.size());
    for (std::size_t c = 0; c < exps.size(); ++c) {
      phi.col(c).setOnes();
      for (int j = 0; j < d; ++j)
        for (int e = 0; e < exps[c][j]; ++e) phi.col(c) = phi.col(c).cwiseProduct(cond.col(j));
    }
    DesignMatrix dm;
    dm.qr.compute(phi);
    if (dm.qr.rank() == phi.cols() || D == 0) {
      if (D < degree && warnings)
        warnings->push_back("regression degree reduced to " + std::to_string(D) + " at step " +
                            std::to_string(step) + " (rank-deficient design)");
      dm.phi = std::move(phi);
      dm.degree_used = D;
      return dm;
    }
  }
  throw SolverError("build_design: unreachable");
}

}  // namespace detail

/// Backward proximal-projection scheme for the discrete (Y, Z, U) triple:
///   Y_N = h(X_N);
///   c_i = Ê[Y_{i+1} | X_i]           (least-squares regression)
///   ỹ_i = c_i + h f(t_i, X_i, ·)     (explicit in f, or fixed-point implicit)
///   Y_i = prox_{hφ}(ỹ_i)
///   U_i = (ỹ_i − Y_i)/h              (∈ ∂φ(Y_i) by prox optimality)
///   Z_i = Ê[Y_{i+1} ΔW_iᵀ | X_i]/h.
inline BsvTriple solve(const PathEnsemble& ens, const Generator& gen, const TerminalMap& term,
                       const ConvexFunction& phi, const RegressionBasis& basis,
                       const SolveOptions& opts = {}) {
  const int d = ens.dim();
  const int k = phi.dim();
  const int n = ens.n_paths;
  const int N = ens.grid.n_steps;
  if (term.output_dim() != k) throw ConfigError("solve: terminal map dimension != phi dimension");
  if (term.input_dim() != d) throw ConfigError("solve: terminal map input dimension != d");
  if (gen.output_dim() != k) throw ConfigError("solve: generator dimension != phi dimension");

  BsvTriple tri;
  tri.grid = ens.grid;
  tri.n_paths = n;
  tri.d = d;
  tri.k = k;
  tri.Y.resize(n, (N + 1) * k);
  tri.Z.resize(n, N * k * d);
  tri.U.resize(n, N * k);

  const double h = ens.grid.h();
  tri.Y.rightCols(k) = term.eval(ens.states_at(N));

  Vector prox_in(k);
  for (int i = N - 1; i >= 0; --i) {
    const auto x_i = ens.states_at(i);
    const auto y_next = tri.Y.block(0, (i + 1) * k, n, k);
    const auto dm = detail::build_design(x_i, basis.degree, opts.winsor_quantile, &tri.warnings, i);

    // conditional expectation of Y_{i+1}
    Matrix c_i = dm.phi * dm.qr.solve(y_next);

    // generator step
    const double t_i = ens.grid.node(i);
    Matrix y_tilde;
    if (!opts.implicit_f || !gen.depends_on_y()) {
      y_tilde = c_i + h * gen.eval(t_i, x_i, c_i);
    } else {
      y_tilde = c_i;
      bool converged = false;
      for (int it = 0; it < opts.fp_max_iter; ++it) {
        Matrix next = c_i + h * gen.eval(t_i, x_i, y_tilde);
        const double delta = (next - y_tilde).cwiseAbs().maxCoeff();
        y_tilde = std::move(next);
        if (delta <= opts.fp_tol * (1.0 + y_tilde.cwiseAbs().maxCoeff())) {
          converged = true;
          break;
        }
      }
      if (!converged) throw SolverError("solve: implicit generator iteration did not converge");
    }

    // proximal step and reflection density
    auto y_i = tri.Y.block(0, i * k, n, k);
    auto u_i = tri.U.block(0, i * k, n, k);
    if (opts.apply_prox) {
      for (int p = 0; p < n; ++p) {
        prox_in = y_tilde.row(p).transpose();
        y_i.row(p) = prox(phi, h, prox_in).transpose();
      }
      u_i = (y_tilde - y_i) / h;
    } else {
      y_i = y_tilde;
      u_i.setZero();
    }

    // martingale integrand from the increment regression
    const auto dW = ens.increments_at(i);
    Matrix zt(n, k * d);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < d; ++b)
        zt.col(a * d + b) = y_next.col(a).cwiseProduct(dW.col(b));
    tri.Z.block(0, i * k * d, n, k * d) = dm.phi * dm.qr.solve(zt) / h;
  }
  return tri;
}

/// Discrete flatness audit: (Y_i, U_i) ∈ ∂φ on sampled (path, step) pairs,
/// plus finiteness of the empirical mean of φ(Y_i).
struct FlatnessReport {
  int n_checked = 0;
  int n_violations = 0;
  double violation_fraction = 0.0;
  bool mean_phi_finite = false;
  double mean_phi = 0.0;
  bool ok(double /*tol*/) const { return n_violations == 0 && mean_phi_finite; }
};

inline FlatnessReport flatness_check(const BsvTriple& tri, const ConvexFunction& phi, double tol,
                                     int n_samples = 256, std::uint64_t seed = 0) {
  FlatnessReport rep;
  SampleStream stream(seed, 0xf1a7);
  DirectionSampler dirs{32, seed};
  const int N = tri.grid.n_steps;
  for (int s = 0; s < n_samples; ++s) {
    const int p = static_cast<int>(stream.uniform() * tri.n_paths) % tri.n_paths;
    const int i = static_cast<int>(stream.uniform() * N) % N;
    const Vector y = tri.Y_at(i).row(p).transpose();
    const Vector u = tri.U_at(i).row(p).transpose();
    ++rep.n_checked;
    if (!in_domain(phi, y) || !subdiff_contains(phi, y, u, dirs, tol)) ++rep.n_violations;
  }
  rep.violation_fraction = static_cast<double>(rep.n_violations) / std::max(1, rep.n_checked);

  ExtendedReal acc = 0.0;
  long count = 0;
  bool finite = true;
  for (int i = 0; i < N && finite; ++i) {
    for (int p = 0; p < tri.n_paths; ++p) {
      const ExtendedReal v = eval(phi, tri.Y_at(i).row(p).transpose());
      if (!v.is_finite()) {
        finite = false;
        break;
      }
      acc = acc + v;
      ++count;
    }
  }
  rep.mean_phi_finite = finite;
  rep.mean_phi = finite && count > 0 ? acc.value() / static_cast<double>(count) : 0.0;
  return rep;
}

/// Empirical E sup_i |Y_i|² against C(1+|x|²).
struct StabilityReport {
  double sup_moment_sq = 0.0;
  double ratio = 0.0;
};

inline StabilityReport stability_check(const BsvTriple& tri, const Eigen::Ref<const Vector>& x) {
  StabilityReport rep;
  double acc = 0.0;
  for (int p = 0; p < tri.n_paths; ++p) {
    double sup = 0.0;
    for (int i = 0; i <= tri.grid.n_steps; ++i) sup = std::max(sup, tri.Y_at(i).row(p).squaredNorm());
    acc += sup;
  }
  rep.sup_moment_sq = acc / tri.n_paths;
  rep.ratio = rep.sup_moment_sq / (1.0 + x.squaredNorm());
  return rep;
}

}  // namespace pvi
