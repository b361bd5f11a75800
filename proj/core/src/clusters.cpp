#include "clusterwalk/clusters.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "clusterwalk/stats.hpp"

namespace clusterwalk {

double subcritical_guard(int d) {
  switch (d) {
    case 1: return 0.99;
    case 2: return 0.55;  // site threshold on Z^2 is ~0.593
    case 3: return 0.30;  // ~0.312
    case 4: return 0.15;  // ~0.197
    default: throw ParameterError("dimension must be in 1..4");
  }
}

std::int64_t ClusterMap::open_count() const {
  std::int64_t total = 0;
  for (std::int64_t s : sizes) total += s;
  return total;
}

const char* cluster_scope_name(ClusterScope s) {
  return s == ClusterScope::margin ? "margin" : "truncated";
}

ClusterScope cluster_scope_from_name(const std::string& name) {
  if (name == "margin") return ClusterScope::margin;
  if (name == "truncated") return ClusterScope::truncated;
  throw ParameterError("unknown cluster scope '" + name + "' (expected margin or truncated)");
}

ClusterMap label_clusters(const Environment& env, ClusterScope scope) {
  if (env.is_lazy()) throw ParameterError("label_clusters needs a grid-backed environment");
  const BoxSpec region = (scope == ClusterScope::truncated && env.box()) ? *env.box() : env.region();
  ClusterMap cmap;
  cmap.region = region;
  cmap.env = &env;
  const std::int64_t v = region.volume();
  cmap.label.assign(static_cast<std::size_t>(v), -1);
  std::vector<std::int64_t> stack;
  for (std::int64_t i = 0; i < v; ++i) {
    if (cmap.label[static_cast<std::size_t>(i)] >= 0) continue;
    if (!env.open(region.site_at(i))) continue;
    const std::int32_t id = static_cast<std::int32_t>(cmap.sizes.size());
    std::int64_t count = 0;
    cmap.label[static_cast<std::size_t>(i)] = id;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::int64_t j = stack.back();
      stack.pop_back();
      ++count;
      const LatticePoint x = region.site_at(j);
      for (int a = 0; a < region.d; ++a) {
        for (int dir = -1; dir <= 1; dir += 2) {
          const LatticePoint y = x.neighbor(a, dir);
          if (!region.contains(y)) continue;
          const std::int64_t k = region.index_of(y);
          if (cmap.label[static_cast<std::size_t>(k)] >= 0 || !env.open(y)) continue;
          cmap.label[static_cast<std::size_t>(k)] = id;
          stack.push_back(k);
        }
      }
    }
    cmap.sizes.push_back(count);
  }
  return cmap;
}

std::int64_t cluster_size(const ClusterMap& cmap, const LatticePoint& x) {
  return cmap.size_at(x);  // index_of throws OutOfRegionError outside the region
}

GrownCluster grow_cluster(const Environment& env, const LatticePoint& x, std::int64_t cap) {
  if (cap < 1) throw ParameterError("growth cap must be >= 1");
  GrownCluster g;
  g.root = x;
  g.generations.emplace(pack_site(x), 0);
  g.root_open = env.open(x);
  if (!g.root_open) return g;  // closed start: empty cluster, empty boundary

  g.cluster.push_back(x);
  std::vector<LatticePoint> frontier{x};
  std::vector<LatticePoint> next;
  for (std::int32_t gen = 1; !frontier.empty(); ++gen) {
    next.clear();
    for (const LatticePoint& s : frontier) {
      for (int a = 0; a < env.dim(); ++a) {
        for (int dir = -1; dir <= 1; dir += 2) {
          const LatticePoint y = s.neighbor(a, dir);
          const std::uint64_t packed = pack_site(y);
          if (g.generations.count(packed)) continue;
          g.generations.emplace(packed, gen);
          if (env.open(y)) {
            g.cluster.push_back(y);
            next.push_back(y);
            if (g.size() > cap)
              throw GrowthCapError("cluster growth exceeded cap of " + std::to_string(cap) + " sites", g);
          } else {
            g.boundary.push_back(y);
          }
        }
      }
    }
    frontier.swap(next);
  }
  return g;
}

std::vector<LatticePoint> holes(const std::vector<LatticePoint>& region, const BoxSpec& bounding) {
  const std::int64_t v = bounding.volume();
  if (v > (std::int64_t{1} << 28)) throw CapacityError("bounding box too large for hole fill");
  // 0 complement, 1 region, 2 complement reached from the shell
  std::vector<std::uint8_t> mark(static_cast<std::size_t>(v), 0);
  for (const LatticePoint& x : region) {
    if (!bounding.contains(x)) throw ParameterError("hole fill: region site " + x.to_string() + " outside bounding box");
    mark[static_cast<std::size_t>(bounding.index_of(x))] = 1;
  }
  const std::int32_t lo = bounding.axis_lo();
  const std::int32_t hi = bounding.axis_hi();
  std::vector<std::int64_t> stack;
  for (std::int64_t i = 0; i < v; ++i) {
    if (mark[static_cast<std::size_t>(i)] != 0) continue;
    const LatticePoint s = bounding.site_at(i);
    bool on_shell = false;
    for (int a = 0; a < bounding.d; ++a)
      if (s[a] == lo || s[a] == hi) { on_shell = true; break; }
    if (!on_shell) continue;
    mark[static_cast<std::size_t>(i)] = 2;
    stack.push_back(i);
  }
  while (!stack.empty()) {
    const std::int64_t j = stack.back();
    stack.pop_back();
    const LatticePoint x = bounding.site_at(j);
    for (int a = 0; a < bounding.d; ++a) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const LatticePoint y = x.neighbor(a, dir);
        if (!bounding.contains(y)) continue;
        const std::int64_t k = bounding.index_of(y);
        if (mark[static_cast<std::size_t>(k)] != 0) continue;
        mark[static_cast<std::size_t>(k)] = 2;
        stack.push_back(k);
      }
    }
  }
  std::vector<LatticePoint> out;
  for (std::int64_t i = 0; i < v; ++i)
    if (mark[static_cast<std::size_t>(i)] == 0) out.push_back(bounding.site_at(i));
  return out;
}

std::int64_t LazyClusterCache::size_at(const LatticePoint& x) {
  const std::int32_t l = label_at(x);
  return l < 0 ? 0 : sizes_[static_cast<std::size_t>(l)];
}

std::int32_t LazyClusterCache::label_at(const LatticePoint& x) {
  if (!env_->open(x)) return -1;
  const std::uint64_t packed = pack_site(x);
  auto it = label_.find(packed);
  if (it != label_.end()) return it->second;
  const GrownCluster g = grow_cluster(*env_, x, cap_);
  const std::int32_t id = static_cast<std::int32_t>(sizes_.size());
  for (const LatticePoint& s : g.cluster) {
    const bool fresh = label_.emplace(pack_site(s), id).second;
    internal_check(fresh, "lazy cluster cache: component absorbed an already-labeled site");
  }
  sizes_.push_back(g.size());
  return id;
}

TailStats cluster_tail(double p, int d, std::int64_t samples, std::uint64_t seed,
                       const TailOptions& opts) {
  if (!opts.override_guard && p >= subcritical_guard(d))
    throw ParameterError("p >= subcritical guard for this dimension; pass the override to proceed");
  if (samples < 1000) throw ParameterError("cluster_tail needs >= 1000 samples");

  const CounterRng driver(seed, /*stream=*/3);
  std::vector<std::int64_t> size_hist;  // size -> multiplicity
  TailStats stats;
  stats.sample_count = samples;
  for (std::int64_t i = 0; i < samples; ++i) {
    Environment env = Environment::lazy(p, d, driver.child(static_cast<std::uint64_t>(i)).key());
    std::int64_t size = 0;
    try {
      size = grow_cluster(env, LatticePoint::origin(d), opts.growth_cap).size();
    } catch (const GrowthCapError&) {
      ++stats.cap_hits;
      size = opts.growth_cap + 1;
      const double done = static_cast<double>(i + 1);
      if (stats.cap_hits >= 3 && static_cast<double>(stats.cap_hits) > opts.cap_hit_tolerance * done)
        throw ParameterError("growth cap hit on " + std::to_string(stats.cap_hits) + " of " +
                             std::to_string(i + 1) + " samples; p looks supercritical");
    }
    if (static_cast<std::size_t>(size) >= size_hist.size())
      size_hist.resize(static_cast<std::size_t>(size) + 1, 0);
    ++size_hist[static_cast<std::size_t>(size)];
  }

  // Exceedance counts over thresholds N = 0, 1, ...; suffix sums keep the
  // tail monotone by construction.
  std::int64_t running = samples;
  for (std::size_t n = 0; n + 1 < size_hist.size(); ++n) {
    running -= size_hist[n];
    if (running <= 0) break;
    stats.thresholds.push_back(static_cast<std::int64_t>(n));
    stats.counts.push_back(running);
    stats.frequencies.push_back(static_cast<double>(running) / static_cast<double>(samples));
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    if (stats.counts[i] < opts.min_hits) break;
    xs.push_back(static_cast<double>(stats.thresholds[i]));
    ys.push_back(std::log(stats.frequencies[i]));
  }
  if (xs.size() >= 2) {
    const LinearFit f = linear_fit(xs, ys);
    stats.fitted_slope = f.slope;
    stats.r_squared = f.r_squared;
  }
  return stats;
}

}
