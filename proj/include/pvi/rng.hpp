#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "pvi/types.hpp"

namespace pvi {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
///
/// Purely functional: a (counter, key) pair maps to four 32-bit words.  All
/// randomness in the library is derived from explicit (seed, stream, counter)
/// coordinates, so results are independent of evaluation order and worker
/// count.
namespace philox {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Map a 32-bit word to the open interval (0,1).
inline double to_unit(std::uint32_t x) { return (static_cast<double>(x) + 0.5) * 0x1p-32; }

}  // namespace philox

/// A buffered stream of doubles addressed by (seed, stream).
///
/// Streams with distinct (seed, stream) coordinates are statistically
/// independent; two streams constructed with equal coordinates replay the
/// identical sequence.  Cheap to construct and copy; pass by value.
class SampleStream {
public:
  SampleStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        hi_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  /// Uniform in (0,1).
  double uniform() { return philox::to_unit(next_word()); }

  /// Standard normal via Box–Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Uniform direction on the unit sphere of R^n.
  Vector unit_vector(int n) {
    for (;;) {
      Vector v = normal_vector(n);
      const double norm = v.norm();
      if (norm > 1e-12) return v / norm;
    }
  }

private:
  std::uint32_t next_word() {
    if (lane_ == 4) {
      buf_ = philox::block({ctr_lo_, ctr_hi_, hi_[0], hi_[1]}, key_);
      lane_ = 0;
      if (++ctr_lo_ == 0) ++ctr_hi_;
    }
    return buf_[lane_++];
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> hi_;
  std::uint32_t ctr_lo_ = 0;
  std::uint32_t ctr_hi_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int lane_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Normals for Monte Carlo paths, addressed by (seed; path, step, lane).
///
/// The four Philox counter words are (step, block, path_lo, path_hi) with the
/// seed as key, so any (path, step) sub-block can be generated in isolation.
class PathNormals {
public:
  explicit PathNormals(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Fill `out` with the d standard normals of (path, step).
  void fill(std::uint64_t path, std::uint32_t step, Eigen::Ref<Eigen::RowVectorXd> out) const {
    const int d = static_cast<int>(out.size());
    const std::array<std::uint32_t, 2> p{static_cast<std::uint32_t>(path),
                                         static_cast<std::uint32_t>(path >> 32)};
    for (int base = 0, blk = 0; base < d; base += 2, ++blk) {
      const auto w = philox::block({step, static_cast<std::uint32_t>(blk), p[0], p[1]}, key_);
      const double u1 = philox::to_unit(w[0]);
      const double u2 = philox::to_unit(w[1]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * M_PI * u2;
      out[base] = r * std::cos(a);
      if (base + 1 < d) out[base + 1] = r * std::sin(a);
    }
  }

private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace pvi
