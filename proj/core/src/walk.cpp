#include "clusterwalk/walk.hpp"

#include <string>

namespace clusterwalk {

const char* restriction_name(Restriction r) {
  return r == Restriction::selfloop ? "selfloop" : "renormalize";
}

Restriction restriction_from_name(const std::string& name) {
  if (name == "selfloop") return Restriction::selfloop;
  if (name == "renormalize") return Restriction::renormalize;
  throw ParameterError("unknown restriction '" + name + "' (selfloop|renormalize)");
}

int step_index(const LocalKernel& k, CounterRng& rng) {
  if (k.count <= 0) throw ParameterError("cannot step from an empty kernel");
  const double u = rng.next_unit();
  double acc = 0.0;
  for (int i = 0; i < k.count; ++i) {
    acc += k.probability[static_cast<std::size_t>(i)];
    if (u < acc) return i;
  }
  return k.count - 1;  // guard against rounding at the top end
}

LatticePoint step(const LocalKernel& k, CounterRng& rng) {
  return k.neighbors[static_cast<std::size_t>(step_index(k, rng))];
}

ReversibleMeasure stationary_box_measure(const ClusterMap& cmap, const BoxSpec& box,
                                         const KernelParams& kp, Restriction convention) {
  // A map covering exactly the box is the truncated-scope universe where
  // everything beyond the box counts as closed.
  BoxSizeField field{&cmap, cmap.region == box};

  ReversibleMeasure pi;
  pi.box = box;
  pi.convention = convention;
  const std::int64_t v = box.volume();
  pi.log_values.resize(static_cast<std::size_t>(v));
  pi.values.resize(static_cast<std::size_t>(v));

  double m = -1e300;
  for (std::int64_t i = 0; i < v; ++i) {
    const LatticePoint x = box.site_at(i);
    const double lv = convention == Restriction::selfloop
                          ? log_reversible_measure(field, x, kp)
                          : log_reversible_measure_in_box(field, x, kp, box);
    pi.log_values[static_cast<std::size_t>(i)] = lv;
    m = std::max(m, lv);
  }
  double s = 0.0;
  for (std::int64_t i = 0; i < v; ++i) s += std::exp(pi.log_values[static_cast<std::size_t>(i)] - m);
  pi.log_normalizer = m + std::log(s);
  for (std::int64_t i = 0; i < v; ++i) {
    pi.log_values[static_cast<std::size_t>(i)] -= pi.log_normalizer;
    pi.values[static_cast<std::size_t>(i)] = std::exp(pi.log_values[static_cast<std::size_t>(i)]);
  }
  return pi;
}

RestrictedKernel::RestrictedKernel(const ClusterMap& cmap, const BoxSpec& box,
                                   const KernelParams& kp, Restriction mode)
    : cmap_(&cmap), box_(box), kp_(kp), mode_(mode), field_{&cmap, cmap.region == box} {
  if (box.d != cmap.region.d) throw ParameterError("box and cluster map dimensions differ");
  if (!field_.outside_closed && cmap.region.n < box.n + 2)
    throw ParameterError("cluster map region must cover the box plus one ring (margin >= 1)");
}

RestrictedKernel::Row RestrictedKernel::row(const LatticePoint& x) const {
  if (!box_.contains(x)) throw OutOfRegionError("restricted kernel row for site outside box");
  Row r;
  BoxSizeField f = field_;
  if (mode_ == Restriction::selfloop) {
    const LocalKernel k = local_kernel(f, x, kp_);
    for (int i = 0; i < k.count; ++i) {
      const LatticePoint& y = k.neighbors[static_cast<std::size_t>(i)];
      const double pr = k.probability[static_cast<std::size_t>(i)];
      if (box_.contains(y)) {
        r.nbr[static_cast<std::size_t>(r.count)] = {y, pr};
        ++r.count;
      } else {
        r.self += pr;
      }
    }
  } else {
    const LocalKernel k = local_kernel_in_box(f, x, kp_, box_);
    if (k.count == 0) {
      r.self = 1.0;  // isolated state (n = 1): hold forever
      return r;
    }
    for (int i = 0; i < k.count; ++i) {
      r.nbr[static_cast<std::size_t>(r.count)] = {k.neighbors[static_cast<std::size_t>(i)],
                                                  k.probability[static_cast<std::size_t>(i)]};
      ++r.count;
    }
  }
  return r;
}

RestrictedKernel restrict_to_box(const ClusterMap& cmap, const KernelParams& kp,
                                 const BoxSpec& box, Restriction mode) {
  return RestrictedKernel(cmap, box, kp, mode);
}

WalkTrajectory simulate_discrete(const Environment& env, const KernelParams& kp,
                                 std::int64_t t_max, std::uint64_t seed,
                                 const SimulateOptions& opts) {
  if (t_max < 0) throw ParameterError("t_max must be >= 0");
  KernelParams params = kp;
  params.d = env.dim();
  const LatticePoint start = opts.start.dim() == 0 ? LatticePoint::origin(env.dim()) : opts.start;
  if (start.dim() != env.dim()) throw ParameterError("start site dimension mismatch");
  if (opts.restrict_box != nullptr && !opts.restrict_box->contains(start))
    throw ParameterError("start site outside the restriction box");

  WalkTrajectory traj;
  traj.dim = env.dim();
  traj.beta = params.beta;
  traj.p = env.p();
  traj.seed = seed;
  traj.positions.reserve(static_cast<std::size_t>(t_max) + 1);
  traj.max_displacement.reserve(static_cast<std::size_t>(t_max) + 1);

  CounterRng rng(seed, /*stream=*/1);

  auto record = [&](std::int64_t, const LatticePoint& x, std::int64_t md) {
    traj.positions.push_back(x);
    traj.max_displacement.push_back(md);
    return true;
  };

  if (env.is_lazy()) {
    LazyClusterCache field(env, opts.growth_cap);
    run_walk(field, params, start, t_max, rng, opts.restrict_box, opts.restriction, record);
    if (opts.record_cluster_sizes) {
      traj.cluster_sizes.reserve(traj.positions.size());
      for (const LatticePoint& x : traj.positions) traj.cluster_sizes.push_back(field.size_at(x));
    }
  } else {
    const ClusterMap cmap = label_clusters(env, ClusterScope::margin);
    BoxSizeField field{&cmap, env.box() == nullptr};
    run_walk(field, params, start, t_max, rng, opts.restrict_box, opts.restriction, record);
    if (opts.record_cluster_sizes) {
      traj.cluster_sizes.reserve(traj.positions.size());
      for (const LatticePoint& x : traj.positions) traj.cluster_sizes.push_back(field.size_at(x));
    }
  }
  return traj;
}

WalkTrajectory continuize(const WalkTrajectory& traj, std::uint64_t seed) {
  if (traj.continuized()) throw ParameterError("trajectory already carries clocks");
  WalkTrajectory out = traj;
  out.jump_times.resize(traj.positions.size());
  CounterRng rng(seed, /*stream=*/2);
  double t = 0.0;
  out.jump_times[0] = 0.0;
  for (std::size_t k = 1; k < out.jump_times.size(); ++k) {
    t += rng.next_exp();
    out.jump_times[k] = t;
  }
  return out;
}

WalkTrajectory strip_clocks(const WalkTrajectory& traj) {
  WalkTrajectory out = traj;
  out.jump_times.clear();
  return out;
}

std::int64_t jumps_by(const WalkTrajectory& traj, double t) {
  if (!traj.continuized()) throw ParameterError("discrete trajectory has no jump times");
  std::int64_t lo = 0, hi = static_cast<std::int64_t>(traj.jump_times.size()) - 1;
  // largest k with jump_times[k] <= t
  while (lo < hi) {
    const std::int64_t mid = (lo + hi + 1) / 2;
    if (traj.jump_times[static_cast<std::size_t>(mid)] <= t) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

}
