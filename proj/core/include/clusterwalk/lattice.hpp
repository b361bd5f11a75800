#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>

#include "clusterwalk/errors.hpp"

namespace clusterwalk {

// Dimensions 1..4 are supported at the type level; the CLI restricts itself
// to d in {1,2,3}.  Coordinates live in int32 and must stay within the
// packable range below so sites can be used as 64-bit hash keys.
inline constexpr int kMaxDim = 4;
inline constexpr std::int32_t kMaxCoord = (1 << 20) - 1;  // 21-bit two's complement per axis

struct LatticePoint {
  std::array<std::int32_t, kMaxDim> c{};
  std::int8_t dims = 0;

  LatticePoint() = default;
  LatticePoint(std::initializer_list<std::int32_t> xs) {
    if (xs.size() < 1 || xs.size() > kMaxDim) throw ParameterError("lattice point needs 1..4 coordinates");
    dims = static_cast<std::int8_t>(xs.size());
    int i = 0;
    for (std::int32_t v : xs) c[i++] = v;
  }
  static LatticePoint origin(int d) {
    if (d < 1 || d > kMaxDim) throw ParameterError("dimension must be in 1..4");
    LatticePoint p;
    p.dims = static_cast<std::int8_t>(d);
    return p;
  }

  // Clamped so index loops stay provably in bounds for the optimizer.
  int dim() const { return dims <= kMaxDim ? dims : kMaxDim; }
  std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  LatticePoint neighbor(int axis, int dir) const {
    LatticePoint p = *this;
    p.c[static_cast<std::size_t>(axis)] += static_cast<std::int32_t>(dir);
    return p;
  }

  std::int64_t linf_norm() const {
    std::int64_t m = 0;
    for (int a = 0; a < dim(); ++a) {
      std::int64_t v = c[static_cast<std::size_t>(a)];
      if (v < 0) v = -v;
      if (v > m) m = v;
    }
    return m;
  }

  bool operator==(const LatticePoint& o) const {
    if (dims != o.dims) return false;
    for (int a = 0; a < dim(); ++a)
      if (c[static_cast<std::size_t>(a)] != o.c[static_cast<std::size_t>(a)]) return false;
    return true;
  }
  bool operator!=(const LatticePoint& o) const { return !(*this == o); }

  // Lexicographic by coordinates; used for deterministic tie-breaks.
  bool operator<(const LatticePoint& o) const {
    for (int a = 0; a < dim(); ++a) {
      if (c[static_cast<std::size_t>(a)] != o.c[static_cast<std::size_t>(a)])
        return c[static_cast<std::size_t>(a)] < o.c[static_cast<std::size_t>(a)];
    }
    return false;
  }

  std::string to_string() const;
};

// Packs a point into 64 bits (21 bits per axis for d<=3, 16 bits for d=4).
// Used as the hash key for lazy environments and cluster caches.
std::uint64_t pack_site(const LatticePoint& x);

// Centered box Lambda_n = (-n/2, n/2]^d.  Membership is exact in integer
// arithmetic: x is inside iff 2*x > -n and 2*x <= n on every axis, which
// gives exactly n sites per axis for even and odd n alike.
struct BoxSpec {
  std::int32_t n = 0;
  std::int32_t d = 0;

  BoxSpec() = default;
  BoxSpec(std::int32_t n_, std::int32_t d_) : n(n_), d(d_) {
    if (n < 1) throw ParameterError("box side must be >= 1");
    if (d < 1 || d > kMaxDim) throw ParameterError("box dimension must be in 1..4");
  }

  std::int32_t axis_hi() const { return n / 2; }
  std::int32_t axis_lo() const { return axis_hi() - n + 1; }

  bool contains(const LatticePoint& x) const {
    if (x.dim() != d) return false;
    for (int a = 0; a < d; ++a) {
      std::int64_t twice = 2ll * x[a];
      if (!(twice > -static_cast<std::int64_t>(n) && twice <= static_cast<std::int64_t>(n))) return false;
    }
    return true;
  }

  std::int64_t volume() const {
    std::int64_t v = 1;
    for (int a = 0; a < d; ++a) v *= n;
    return v;
  }

  // Row-major index with the last axis fastest.
  std::int64_t index_of(const LatticePoint& x) const;
  LatticePoint site_at(std::int64_t index) const;

  BoxSpec enlarged(std::int32_t margin) const { return BoxSpec(n + 2 * margin, d); }

  bool operator==(const BoxSpec& o) const { return n == o.n && d == o.d; }
};

template <class F>
void for_each_site(const BoxSpec& box, F&& f) {
  const std::int64_t v = box.volume();
  for (std::int64_t i = 0; i < v; ++i) f(box.site_at(i));
}

}
