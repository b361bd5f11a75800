#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "clusterwalk/lattice.hpp"
#include "clusterwalk/rng.hpp"

namespace clusterwalk {

struct EnvOptions {
  // Margin ring width; -1 means the default 4*ceil(ln n), floored at 2.
  std::int32_t margin = -1;
  // Capacity budget for eager sampling (sites of the enlarged region).
  std::int64_t max_sites = std::int64_t{1} << 26;
  // Margin doubling: resample from sub-seeds when a cluster that matters to
  // the core box (it meets Lambda_{n+2}) touches the outer shell.
  bool escalate_on_shell_contact = true;
  int max_escalations = 8;
};

std::int32_t default_margin(std::int32_t n);

// A site-percolation environment.  Site statuses are a pure function of
// (environment key, site), so a lazy environment materializes the same field
// an eager one holds, in any query order.  Three flavours share the class:
//
//   sample(...)    eager grid over Lambda_{n+2m} (box plus margin ring)
//   lazy(...)      unbounded, materialized on demand into a hash map
//   from_grid(...) explicit statuses (snapshot loads, hand-built testbeds)
//
// Instances are logically immutable: a status, once seen, never changes.
// Lazy materialization writes through a cache, so concurrent use requires
// one writer at a time (single-writer contract); eager environments are
// freely shareable.
class Environment {
public:
  static Environment sample(double p, const BoxSpec& box, std::uint64_t seed, const EnvOptions& opts = {});
  static Environment lazy(double p, int dim, std::uint64_t seed);
  static Environment from_grid(const BoxSpec& region, std::vector<std::uint8_t> statuses, double p = 0.0);

  bool is_lazy() const { return lazy_; }
  int dim() const { return dim_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t env_key() const { return key_; }

  // Core box (eager only; nullptr for lazy and from_grid environments).
  const BoxSpec* box() const { return has_box_ ? &box_ : nullptr; }
  // Full sampled region (box plus margin) for grid-backed environments.
  const BoxSpec& region() const;
  bool grid_backed() const { return !lazy_; }

  std::int32_t margin() const { return margin_; }
  int escalations() const { return escalations_; }

  // Status of a site; materializes lazily.  Grid-backed environments throw
  // OutOfRegionError outside their region.
  bool open(const LatticePoint& x) const;
  // Status if already recorded, nothing otherwise.  Never materializes.
  std::optional<bool> recorded(const LatticePoint& x) const;
  std::int64_t known_count() const;

  // Raw row-major statuses of the region (grid-backed only); snapshot export.
  const std::vector<std::uint8_t>& grid() const;

private:
  Environment() = default;
  bool draw(const LatticePoint& x) const;

  bool lazy_ = false;
  bool has_box_ = false;
  int dim_ = 0;
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::int32_t margin_ = 0;
  int escalations_ = 0;
  BoxSpec box_;
  BoxSpec region_;
  std::vector<std::uint8_t> grid_;
  mutable std::unordered_map<std::uint64_t, bool> cache_;
};

}
