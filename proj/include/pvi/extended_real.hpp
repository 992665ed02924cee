#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace pvi {

/// A value of the extended real line R ∪ {−∞, +∞}.
///
/// Infinities are carried as explicit tags rather than IEEE specials so that
/// indicator functions can return +∞ as a routine, exactly-representable
/// value.  Arithmetic follows the convex-analysis conventions:
/// r + ∞ = ∞, t·∞ = ∞ for t > 0, t·∞ = −∞ for t < 0, 0·∞ = 0.
/// ∞ + (−∞) is undefined and throws.
class ExtendedReal {
public:
  constexpr ExtendedReal() : v_(0.0), tag_(Tag::Finite) {}

  // Implicit on purpose: finite doubles embed into the extended line.
  // IEEE ±inf inputs map to the tagged infinities; NaN is rejected.
  ExtendedReal(double v) : v_(v), tag_(Tag::Finite) {
    if (std::isnan(v)) throw std::domain_error("ExtendedReal: NaN");
    if (std::isinf(v)) {
      tag_ = v > 0 ? Tag::PosInf : Tag::NegInf;
      v_ = 0.0;
    }
  }

  static constexpr ExtendedReal infinity() { return ExtendedReal(Tag::PosInf); }
  static constexpr ExtendedReal neg_infinity() { return ExtendedReal(Tag::NegInf); }

  constexpr bool is_finite() const { return tag_ == Tag::Finite; }
  constexpr bool is_pos_inf() const { return tag_ == Tag::PosInf; }
  constexpr bool is_neg_inf() const { return tag_ == Tag::NegInf; }

  /// Finite value; throws if the value is ±∞.
  double value() const {
    if (!is_finite()) throw std::domain_error("ExtendedReal: value() on infinity");
    return v_;
  }

  double value_or(double fallback) const { return is_finite() ? v_ : fallback; }

  /// Collapse to an IEEE double (±inf for the tagged infinities).
  double to_double() const {
    if (is_pos_inf()) return std::numeric_limits<double>::infinity();
    if (is_neg_inf()) return -std::numeric_limits<double>::infinity();
    return v_;
  }

  ExtendedReal operator-() const {
    if (is_pos_inf()) return neg_infinity();
    if (is_neg_inf()) return infinity();
    return ExtendedReal(-v_);
  }

  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.is_finite() && b.is_finite()) return ExtendedReal(a.v_ + b.v_);
    if (a.is_pos_inf() && b.is_neg_inf()) throw std::domain_error("ExtendedReal: ∞ + (−∞)");
    if (a.is_neg_inf() && b.is_pos_inf()) throw std::domain_error("ExtendedReal: ∞ + (−∞)");
    return a.is_finite() ? b : a;
  }

  friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }

  /// Scaling by a finite real.  0·∞ = 0.
  friend ExtendedReal operator*(double t, const ExtendedReal& a) {
    if (std::isnan(t) || std::isinf(t)) throw std::domain_error("ExtendedReal: non-finite scale");
    if (a.is_finite()) return ExtendedReal(t * a.v_);
    if (t > 0) return a;
    if (t < 0) return -a;
    return ExtendedReal(0.0);
  }
  friend ExtendedReal operator*(const ExtendedReal& a, double t) { return t * a; }

  /// Division by a nonzero finite real.
  friend ExtendedReal operator/(const ExtendedReal& a, double t) {
    if (t == 0.0) throw std::domain_error("ExtendedReal: division by zero");
    return (1.0 / t) * a;
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.tag_ != b.tag_) return false;
    return !a.is_finite() || a.v_ == b.v_;
  }
  friend bool operator!=(const ExtendedReal& a, const ExtendedReal& b) { return !(a == b); }

  // Total order with −∞ < finite < +∞.
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.tag_ == b.tag_) return a.is_finite() && a.v_ < b.v_;
    if (a.is_neg_inf()) return true;
    if (a.is_pos_inf()) return false;
    return b.is_pos_inf();
  }
  friend bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
  friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }
  friend bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& a) {
    if (a.is_pos_inf()) return os << "inf";
    if (a.is_neg_inf()) return os << "-inf";
    return os << a.v_;
  }

private:
  enum class Tag { Finite, PosInf, NegInf };
  constexpr explicit ExtendedReal(Tag tag) : v_(0.0), tag_(tag) {}

  double v_;
  Tag tag_;
};

inline ExtendedReal min(const ExtendedReal& a, const ExtendedReal& b) { return a < b ? a : b; }
inline ExtendedReal max(const ExtendedReal& a, const ExtendedReal& b) { return a < b ? b : a; }

}  // namespace pvi
