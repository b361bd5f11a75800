#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"
#include "clusterwalk/lattice.hpp"

namespace clusterwalk {

// Default per-dimension ceiling on p.  Growing clusters lazily only
// terminates when the percolation is subcritical, so anything at or above
// these values is refused unless the caller overrides the guard.
double subcritical_guard(int d);

enum class ClusterScope {
  margin,     // label the whole sampled region (approximate infinite-volume sizes)
  truncated,  // label only the core box; clusters are clipped at its edge
};

const char* cluster_scope_name(ClusterScope s);
ClusterScope cluster_scope_from_name(const std::string& name);

// Connected components of the open sites of a grid-backed environment.
// label is -1 on closed sites; sizes is indexed by label.
struct ClusterMap {
  BoxSpec region;
  std::vector<std::int32_t> label;
  std::vector<std::int64_t> sizes;
  const Environment* env = nullptr;

  std::int32_t label_at(const LatticePoint& x) const {
    return label[static_cast<std::size_t>(region.index_of(x))];
  }
  // 0 on closed sites, the component size on open ones.
  std::int64_t size_at(const LatticePoint& x) const {
    const std::int32_t l = label_at(x);
    return l < 0 ? 0 : sizes[static_cast<std::size_t>(l)];
  }
  std::int64_t size_of_label(std::int32_t l) const {
    return sizes[static_cast<std::size_t>(l)];
  }
  std::int64_t cluster_count() const { return static_cast<std::int64_t>(sizes.size()); }
  std::int64_t open_count() const;
};

ClusterMap label_clusters(const Environment& env, ClusterScope scope = ClusterScope::margin);
std::int64_t cluster_size(const ClusterMap& cmap, const LatticePoint& x);

// Result of growing one cluster by generations: generation 0 is the start
// site; each next generation is the set of fresh neighbors of the previous
// generation's open sites.  When the process stops, `cluster` is the open
// component and `boundary` its closed surrounding; every sampled site keeps
// the generation index it was assigned.
struct GrownCluster {
  LatticePoint root;
  bool root_open = false;
  std::vector<LatticePoint> cluster;
  std::vector<LatticePoint> boundary;
  std::unordered_map<std::uint64_t, std::int32_t> generations;  // packed site -> index

  std::int64_t size() const { return static_cast<std::int64_t>(cluster.size()); }
};

class GrowthCapError : public CapacityError {
public:
  GrowthCapError(const std::string& what, GrownCluster partial_state)
      : CapacityError(what), partial(std::move(partial_state)) {}
  GrownCluster partial;
};

inline constexpr std::int64_t kDefaultGrowthCap = 1'000'000;

GrownCluster grow_cluster(const Environment& env, const LatticePoint& x,
                          std::int64_t cap = kDefaultGrowthCap);

// Sites outside `region` from which every lattice path to the bounding-box
// boundary meets `region`; flood fill from the complement's outer shell.
std::vector<LatticePoint> holes(const std::vector<LatticePoint>& region, const BoxSpec& bounding);

// On-demand component sizes over a (typically lazy) environment.  Components
// are grown to closure on first touch and memoized; the memo only ever holds
// complete clusters, so two cached components can never merge.
class LazyClusterCache {
public:
  explicit LazyClusterCache(const Environment& env, std::int64_t cap = kDefaultGrowthCap)
      : env_(&env), cap_(cap) {}

  std::int64_t size_at(const LatticePoint& x);
  // -1 for closed sites, a stable component id otherwise.
  std::int32_t label_at(const LatticePoint& x);
  std::int64_t size_of_label(std::int32_t label) const {
    return sizes_.at(static_cast<std::size_t>(label));
  }
  std::int64_t component_count() const { return static_cast<std::int64_t>(sizes_.size()); }
  const Environment& env() const { return *env_; }

private:
  const Environment* env_;
  std::int64_t cap_;
  std::unordered_map<std::uint64_t, std::int32_t> label_;  // open sites only
  std::vector<std::int64_t> sizes_;
};

// Cluster-size tail at the origin from repeated lazy growths.
struct TailStats {
  std::vector<std::int64_t> thresholds;   // N = 0, 1, ...
  std::vector<std::int64_t> counts;       // samples with |C(0)| > N
  std::vector<double> frequencies;
  std::int64_t sample_count = 0;
  std::int64_t cap_hits = 0;
  double fitted_slope = 0.0;  // least-squares slope of log frequency vs N
  double r_squared = 0.0;
};

struct TailOptions {
  std::int64_t growth_cap = 100'000;
  // Regression uses thresholds with at least this many exceedances.
  std::int64_t min_hits = 10;
  // Fraction of capped growths above which the run aborts as likely
  // supercritical (the guard on p should normally prevent ever reaching it).
  double cap_hit_tolerance = 1e-3;
  bool override_guard = false;
};

TailStats cluster_tail(double p, int d, std::int64_t samples, std::uint64_t seed,
                       const TailOptions& opts = {});

}
