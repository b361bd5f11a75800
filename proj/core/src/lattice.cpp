#include "clusterwalk/lattice.hpp"

#include <cstdio>

namespace clusterwalk {

std::string LatticePoint::to_string() const {
  std::string s = "(";
  char buf[16];
  for (int a = 0; a < dims; ++a) {
    std::snprintf(buf, sizeof buf, "%d", c[static_cast<std::size_t>(a)]);
    s += buf;
    if (a + 1 < dims) s += ",";
  }
  s += ")";
  return s;
}

std::uint64_t pack_site(const LatticePoint& x) {
  const int d = x.dim();
  const int bits = (d <= 3) ? 21 : 16;
  const std::int32_t lim = (1 << (bits - 1)) - 1;
  std::uint64_t packed = 0;
  for (int a = 0; a < d; ++a) {
    std::int32_t v = x[a];
    if (v > lim || v < -lim - 1)
      throw CapacityError("site coordinate " + x.to_string() + " exceeds packable range");
    packed = (packed << bits) | (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) & ((1ull << bits) - 1));
  }
  // Fold the dimension in so that e.g. (0,0) and (0,0,0) differ.
  return packed | (static_cast<std::uint64_t>(d) << 60);
}

std::int64_t BoxSpec::index_of(const LatticePoint& x) const {
  if (!contains(x)) throw OutOfRegionError("site " + x.to_string() + " outside box");
  const std::int32_t lo = axis_lo();
  std::int64_t idx = 0;
  for (int a = 0; a < d; ++a) idx = idx * n + (x[a] - lo);
  return idx;
}

LatticePoint BoxSpec::site_at(std::int64_t index) const {
  if (index < 0 || index >= volume()) throw OutOfRegionError("box index out of range");
  const std::int32_t lo = axis_lo();
  LatticePoint p = LatticePoint::origin(d);
  for (int a = d - 1; a >= 0; --a) {
    p[a] = lo + static_cast<std::int32_t>(index % n);
    index /= n;
  }
  return p;
}

}
