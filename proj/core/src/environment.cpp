#include "clusterwalk/environment.hpp"

#include <cmath>
#include <string>

#include "clusterwalk/errors.hpp"

namespace clusterwalk {

std::int32_t default_margin(std::int32_t n) {
  const double m = 4.0 * std::ceil(std::log(static_cast<double>(n)));
  return std::max<std::int32_t>(2, static_cast<std::int32_t>(m));
}

namespace {

// True when some cluster both touches the outermost ring of the sampled
// region and reaches the neighbor-closure Lambda_{n+2} of the core box; that
// is exactly the situation where a cluster size feeding a kernel on Lambda_n
// could be truncated by the finite sample.
bool truncation_suspected(const BoxSpec& region, const BoxSpec& core,
                          const std::vector<std::uint8_t>& grid) {
  const BoxSpec closure(core.n + 2, core.d);
  if (region.n <= closure.n) {
    // No slack at all: any open shell site is already inside the closure.
    const std::int64_t v = region.volume();
    for (std::int64_t i = 0; i < v; ++i)
      if (grid[static_cast<std::size_t>(i)]) return true;
    return false;
  }
  const std::int64_t v = region.volume();
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(v), 0);
  std::vector<std::int64_t> stack;
  const std::int32_t lo = region.axis_lo();
  const std::int32_t hi = region.axis_hi();
  for (std::int64_t i = 0; i < v; ++i) {
    if (!grid[static_cast<std::size_t>(i)] || visited[static_cast<std::size_t>(i)]) continue;
    const LatticePoint s = region.site_at(i);
    bool on_shell = false;
    for (int a = 0; a < region.d; ++a)
      if (s[a] == lo || s[a] == hi) { on_shell = true; break; }
    if (!on_shell) continue;
    // Flood the component of this shell site.
    visited[static_cast<std::size_t>(i)] = 1;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::int64_t j = stack.back();
      stack.pop_back();
      const LatticePoint x = region.site_at(j);
      if (closure.contains(x)) return true;
      for (int a = 0; a < region.d; ++a) {
        for (int dir = -1; dir <= 1; dir += 2) {
          const LatticePoint y = x.neighbor(a, dir);
          if (!region.contains(y)) continue;
          const std::int64_t k = region.index_of(y);
          if (visited[static_cast<std::size_t>(k)] || !grid[static_cast<std::size_t>(k)]) continue;
          visited[static_cast<std::size_t>(k)] = 1;
          stack.push_back(k);
        }
      }
    }
  }
  return false;
}

}  // namespace

Environment Environment::sample(double p, const BoxSpec& box, std::uint64_t seed, const EnvOptions& opts) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  std::int32_t m = opts.margin >= 0 ? opts.margin : default_margin(box.n);
  const CounterRng base(seed, /*stream=*/0);

  for (int attempt = 0;; ++attempt) {
    if (attempt > opts.max_escalations)
      throw CapacityError("margin escalation limit reached while sampling environment");
    const std::uint64_t key = attempt == 0 ? base.key() : base.child(static_cast<std::uint64_t>(attempt)).key();
    const BoxSpec region = box.enlarged(m);
    if (region.volume() > opts.max_sites)
      throw CapacityError("sampled region of " + std::to_string(region.volume()) +
                          " sites exceeds the memory budget");
    Environment env;
    env.lazy_ = false;
    env.has_box_ = true;
    env.dim_ = box.d;
    env.p_ = p;
    env.seed_ = seed;
    env.key_ = key;
    env.margin_ = m;
    env.escalations_ = attempt;
    env.box_ = box;
    env.region_ = region;
    env.grid_.resize(static_cast<std::size_t>(region.volume()));
    const std::int64_t v = region.volume();
    for (std::int64_t i = 0; i < v; ++i) {
      const LatticePoint x = region.site_at(i);
      env.grid_[static_cast<std::size_t>(i)] = site_unit(key, x.c.data(), box.d) < p ? 1 : 0;
    }
    if (opts.escalate_on_shell_contact && m > 0 && truncation_suspected(region, box, env.grid_)) {
      m = std::max<std::int32_t>(1, 2 * m);
      continue;
    }
    return env;
  }
}

Environment Environment::lazy(double p, int dim, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be in 1..4");
  Environment env;
  env.lazy_ = true;
  env.dim_ = dim;
  env.p_ = p;
  env.seed_ = seed;
  env.key_ = CounterRng(seed, /*stream=*/0).key();
  return env;
}

Environment Environment::from_grid(const BoxSpec& region, std::vector<std::uint8_t> statuses, double p) {
  if (static_cast<std::int64_t>(statuses.size()) != region.volume())
    throw ParameterError("status grid size does not match region volume");
  Environment env;
  env.lazy_ = false;
  env.has_box_ = false;
  env.dim_ = region.d;
  env.p_ = p;
  env.region_ = region;
  env.grid_ = std::move(statuses);
  return env;
}

const BoxSpec& Environment::region() const {
  if (lazy_) throw ParameterError("lazy environment has no bounded region");
  return region_;
}

bool Environment::draw(const LatticePoint& x) const {
  return site_unit(key_, x.c.data(), dim_) < p_;
}

bool Environment::open(const LatticePoint& x) const {
  if (x.dim() != dim_) throw ParameterError("site dimension does not match environment");
  if (!lazy_) {
    return grid_[static_cast<std::size_t>(region_.index_of(x))] != 0;
  }
  const std::uint64_t packed = pack_site(x);
  auto it = cache_.find(packed);
  if (it != cache_.end()) return it->second;
  const bool value = draw(x);
  cache_.emplace(packed, value);
  return value;
}

std::optional<bool> Environment::recorded(const LatticePoint& x) const {
  if (x.dim() != dim_) return std::nullopt;
  if (!lazy_) {
    if (!region_.contains(x)) return std::nullopt;
    return grid_[static_cast<std::size_t>(region_.index_of(x))] != 0;
  }
  auto it = cache_.find(pack_site(x));
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

std::int64_t Environment::known_count() const {
  return lazy_ ? static_cast<std::int64_t>(cache_.size()) : region_.volume();
}

const std::vector<std::uint8_t>& Environment::grid() const {
  if (lazy_) throw ParameterError("lazy environment has no grid");
  return grid_;
}

}
