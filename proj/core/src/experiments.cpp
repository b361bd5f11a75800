#include "clusterwalk/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "clusterwalk/errors.hpp"
#include "clusterwalk/parallel.hpp"
#include "clusterwalk/stats.hpp"

namespace clusterwalk {

namespace {

void check_walk_params(double p, int d, int replicas, int min_replicas) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie strictly between 0 and 1");
  if (d < 1 || d > kMaxDim) throw ParameterError("dimension must be between 1 and 4");
  if (p >= subcritical_guard(d))
    throw ParameterError("p is at or above the subcritical guard for this dimension; "
                         "lazy cluster growth is not guaranteed to terminate");
  if (replicas < min_replicas)
    throw ParameterError("need at least " + std::to_string(min_replicas) + " replicas");
}

std::vector<std::int64_t> dyadic_grid(std::int64_t t_min, std::int64_t t_max) {
  if (t_min < 2) throw ParameterError("t_min must be at least 2");
  std::vector<std::int64_t> grid;
  for (std::int64_t t = t_min; t <= t_max; t *= 2) grid.push_back(t);
  if (grid.size() < 4)
    throw ParameterError("t_max must cover at least four doublings of t_min for the fit grid");
  return grid;
}

}  // namespace

ExponentEstimate estimate_exponent(double p, int d, double beta, std::int64_t t_max,
                                   int replicas, std::uint64_t seed,
                                   const ExponentOptions& opts) {
  // Below ~30 replicas the slope's standard error is not worth reporting.
  check_walk_params(p, d, replicas, 30);
  const std::vector<std::int64_t> grid = dyadic_grid(opts.t_min, t_max);
  const std::size_t g = grid.size();

  const KernelParams kp{beta, d};
  const LatticePoint start = LatticePoint::origin(d);
  const CounterRng driver(seed, 3);
  const CounterRng walkers(seed, 1);

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(replicas),
                                        std::vector<double>(g, 0.0));
  auto one_replica = [&](std::int64_t r) {
    const std::uint64_t env_seed =
        opts.quenched ? seed : driver.child(static_cast<std::uint64_t>(r)).key();
    Environment env = Environment::lazy(p, d, env_seed);
    LazyClusterCache cache(env, opts.growth_cap);
    CounterRng rng = walkers.child(static_cast<std::uint64_t>(r));
    std::vector<double>& row = rows[static_cast<std::size_t>(r)];
    std::size_t gi = 0;
    run_walk(cache, kp, start, grid.back(), rng, nullptr, Restriction::selfloop,
             [&](std::int64_t t, const LatticePoint&, std::int64_t max_disp) {
               if (gi < g && t == grid[gi]) {
                 row[gi] = std::log(static_cast<double>(std::max<std::int64_t>(max_disp, 1)));
                 ++gi;
               }
               return gi < g;
             });
  };
  // A quenched run shares one lazily materialized environment, so it cannot
  // fan out across threads.
  parallel_for(replicas, opts.quenched ? 1 : opts.threads, one_replica);

  ExponentEstimate est;
  est.p = p;
  est.beta = beta;
  est.d = d;
  est.t_max = t_max;
  est.replicas = replicas;
  est.seed = seed;
  est.time_grid = grid;
  est.mean_log_disp.assign(g, 0.0);
  for (const std::vector<double>& row : rows)
    for (std::size_t i = 0; i < g; ++i) est.mean_log_disp[i] += row[i];
  for (std::size_t i = 0; i < g; ++i) est.mean_log_disp[i] /= static_cast<double>(replicas);

  est.fit_from = static_cast<int>(g / 2);  // upper half of the grid
  std::vector<double> xs, ys;
  for (std::size_t i = static_cast<std::size_t>(est.fit_from); i < g; ++i) {
    xs.push_back(std::log(static_cast<double>(grid[i])));
    ys.push_back(est.mean_log_disp[i]);
  }
  const LinearFit fit = linear_fit(xs, ys);
  est.slope = fit.slope;
  est.stderr_slope = fit.stderr_slope;
  est.intercept = fit.intercept;
  return est;
}

std::vector<ExponentEstimate> beta_sweep(double p, int d, const std::vector<double>& betas,
                                         std::int64_t t_max, int replicas, std::uint64_t seed,
                                         const ExponentOptions& opts) {
  if (betas.empty()) throw ParameterError("beta sweep needs at least one beta");
  const CounterRng driver(seed, 3);
  std::vector<ExponentEstimate> out;
  out.reserve(betas.size());
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const std::uint64_t sub = driver.child(0x5Eull).child(b).key();
    out.push_back(estimate_exponent(p, d, betas[b], t_max, replicas, sub, opts));
  }
  return out;
}

DisplacementTailResult displacement_tail(double p, int d, double beta, std::int64_t t,
                                         int replicas, double epsilon, std::uint64_t seed,
                                         const ExponentOptions& opts) {
  check_walk_params(p, d, replicas, 1);
  if (t < 1) throw ParameterError("t must be positive");
  if (epsilon <= 0.0) throw ParameterError("epsilon must be positive");

  const KernelParams kp{beta, d};
  const LatticePoint start = LatticePoint::origin(d);
  const CounterRng driver(seed, 3);
  const CounterRng walkers(seed, 1);
  const double threshold = std::pow(static_cast<double>(t), 0.5 + epsilon);

  std::vector<std::uint8_t> exceeded(static_cast<std::size_t>(replicas), 0);
  auto one_replica = [&](std::int64_t r) {
    const std::uint64_t env_seed =
        opts.quenched ? seed : driver.child(static_cast<std::uint64_t>(r)).key();
    Environment env = Environment::lazy(p, d, env_seed);
    LazyClusterCache cache(env, opts.growth_cap);
    CounterRng rng = walkers.child(static_cast<std::uint64_t>(r));
    std::int64_t final_norm = 0;
    run_walk(cache, kp, start, t, rng, nullptr, Restriction::selfloop,
             [&](std::int64_t s, const LatticePoint& x, std::int64_t) {
               if (s == t) final_norm = x.linf_norm();
               return true;
             });
    exceeded[static_cast<std::size_t>(r)] =
        static_cast<double>(final_norm) >= threshold ? 1 : 0;
  };
  parallel_for(replicas, opts.quenched ? 1 : opts.threads, one_replica);

  DisplacementTailResult res;
  res.p = p;
  res.beta = beta;
  res.d = d;
  res.t = t;
  res.replicas = replicas;
  res.epsilon = epsilon;
  res.threshold = threshold;
  for (std::uint8_t e : exceeded) res.exceed_count += e;
  res.frequency = static_cast<double>(res.exceed_count) / static_cast<double>(replicas);
  return res;
}

namespace detail {

SojournStats sojourn_from_labels(const std::vector<std::int32_t>& labels,
                                 const std::vector<std::int64_t>& sizes) {
  internal_check(labels.size() == sizes.size(), "sojourn label/size streams disagree");
  SojournStats s;
  s.total_indices = static_cast<std::int64_t>(labels.size());
  std::unordered_map<std::int32_t, std::int64_t> visits;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] < 0) {
      ++s.closed_indices;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    SojournRecord rec;
    rec.entry_time = static_cast<std::int64_t>(i);
    rec.length = static_cast<std::int64_t>(j - i);
    rec.label = labels[i];
    rec.cluster_size = sizes[i];
    rec.visit_index = ++visits[labels[i]];
    s.records.push_back(rec);
    s.open_indices += rec.length;
    i = j;
  }
  internal_check(s.open_indices + s.closed_indices == s.total_indices,
                 "sojourn accounting does not cover the trajectory");

  std::map<std::int64_t, std::int64_t> total_by_size;
  for (const SojournRecord& rec : s.records) {
    total_by_size[rec.cluster_size] += rec.length;
    s.visits_by_size[rec.cluster_size] += 1;
  }
  for (const auto& [size, total] : total_by_size)
    s.mean_length_by_size[size] =
        static_cast<double>(total) / static_cast<double>(s.visits_by_size[size]);
  return s;
}

}  // namespace detail

double sojourn_floor(int d, double beta, std::int64_t size) {
  if (d < 1 || d > kMaxDim) throw ParameterError("dimension must be between 1 and 4");
  const double rivals = static_cast<double>(2 * d - 1);
  return (rivals + std::exp(beta * static_cast<double>(size))) / rivals;
}

EscapeSummary escape_time(const Environment& env, const BoxSpec& box,
                          const KernelParams& params, int replicas, std::uint64_t seed,
                          const EscapeOptions& opts) {
  if (env.is_lazy()) throw ParameterError("escape times need a grid-backed environment");
  if (env.dim() != box.d) throw ParameterError("environment and box dimensions disagree");
  if (replicas < 1) throw ParameterError("need at least one replica");
  if (params.d != 0 && params.d != box.d)
    throw ParameterError("kernel dimension does not match the box");
  KernelParams kp = params;
  kp.d = box.d;

  const ClusterMap cmap = label_clusters(env, opts.scope);
  const BoxSizeField field{&cmap, cmap.region == box};
  if (!field.outside_closed && cmap.region.n < box.n + 2)
    throw ParameterError("restricted walk needs cluster sizes one ring beyond the box; "
                         "sample with margin >= 1");

  EscapeSummary sum;
  sum.n = box.n;
  sum.d = box.d;
  sum.beta = kp.beta;
  sum.replicas = replicas;
  sum.censor_limit = opts.censor_factor * static_cast<std::int64_t>(box.n) *
                     static_cast<std::int64_t>(box.n);

  const LatticePoint start = LatticePoint::origin(box.d);
  const CounterRng walkers(seed, 1);
  std::vector<std::int64_t> steps(static_cast<std::size_t>(replicas), 0);
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(replicas), 0);
  auto one_replica = [&](std::int64_t r) {
    CounterRng rng = walkers.child(static_cast<std::uint64_t>(r));
    std::int64_t hit_time = -1;
    BoxSizeField f = field;  // cheap copy; reads only
    run_walk(f, kp, start, sum.censor_limit, rng, &box, opts.restriction,
             [&](std::int64_t t, const LatticePoint& x, std::int64_t) {
               if (4 * x.linf_norm() >= static_cast<std::int64_t>(box.n)) {
                 hit_time = t;
                 return false;
               }
               return true;
             });
    const std::size_t i = static_cast<std::size_t>(r);
    steps[i] = hit_time < 0 ? sum.censor_limit : hit_time;
    hit[i] = hit_time >= 0 ? 1 : 0;
  };
  parallel_for(replicas, opts.threads, one_replica);

  for (std::uint8_t h : hit)
    if (!h) ++sum.censored;
  sum.steps = std::move(steps);
  std::sort(sum.steps.begin(), sum.steps.end());
  std::vector<double> as_double(sum.steps.begin(), sum.steps.end());
  sum.median_steps = median(as_double);
  sum.q1_steps = quantile(as_double, 0.25);
  sum.q3_steps = quantile(as_double, 0.75);
  sum.median_over_n2 =
      sum.median_steps / (static_cast<double>(box.n) * static_cast<double>(box.n));

  const ReversibleMeasure pi = stationary_box_measure(cmap, box, kp, opts.restriction);
  for_each_site(box, [&](const LatticePoint& x) {
    if (4 * x.linf_norm() >= static_cast<std::int64_t>(box.n)) {
      sum.far_mass += pi.at(x);
      ++sum.far_site_count;
    }
  });
  return sum;
}

// ---------------------------------------------------------------------------
// Entry probe

namespace {

struct ExploredSet {
  std::unordered_set<std::uint64_t> packed;
  std::int64_t max_abs = 0;  // sup-norm radius of everything absorbed so far

  bool contains(const LatticePoint& x) const { return packed.count(pack_site(x)) != 0; }
  void add(const LatticePoint& x) {
    packed.insert(pack_site(x));
    max_abs = std::max(max_abs, x.linf_norm());
  }
};

// Classifies the complement component containing y0: a component reaching
// past the explored radius escapes to infinity (everything out there is
// untouched), anything else is a hole.  The stack pops outward-most sites
// first so exterior probes certify quickly instead of filling the whole
// complement disc.
struct FloodResult {
  bool exterior = false;
  std::vector<LatticePoint> component;
};

FloodResult classify_component(const LatticePoint& y0, const ExploredSet& explored,
                               std::unordered_set<std::uint64_t>& known_exterior) {
  FloodResult res;
  std::unordered_set<std::uint64_t> vis;
  std::vector<LatticePoint> stack{y0};
  vis.insert(pack_site(y0));
  const int d = y0.dim();
  while (!stack.empty()) {
    const LatticePoint s = stack.back();
    stack.pop_back();
    if (s.linf_norm() > explored.max_abs || known_exterior.count(pack_site(s)) != 0) {
      res.exterior = true;
      break;
    }
    res.component.push_back(s);
    std::array<LatticePoint, 2 * kMaxDim> nb;
    int cnt = 0;
    for (int a = 0; a < d; ++a) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const LatticePoint y = s.neighbor(a, dir);
        const std::uint64_t key = pack_site(y);
        if (explored.packed.count(key) != 0 || vis.count(key) != 0) continue;
        vis.insert(key);
        nb[static_cast<std::size_t>(cnt++)] = y;
      }
    }
    // Push the outward-most neighbour last so it is popped first.
    int best = -1;
    for (int i = 0; i < cnt; ++i) {
      if (best < 0 ||
          nb[static_cast<std::size_t>(i)].linf_norm() > nb[static_cast<std::size_t>(best)].linf_norm())
        best = i;
    }
    for (int i = 0; i < cnt; ++i)
      if (i != best) stack.push_back(nb[static_cast<std::size_t>(i)]);
    if (best >= 0) stack.push_back(nb[static_cast<std::size_t>(best)]);
  }
  if (res.exterior) {
    for (std::uint64_t key : vis) known_exterior.insert(key);
    res.component.clear();
  }
  return res;
}

}  // namespace

EntryProbeResult entry_probe(double p, int d, std::int32_t n, double delta, double beta,
                             std::uint64_t seed, const EntryProbeOptions& opts) {
  check_walk_params(p, d, 1, 1);
  if (n < 3) throw ParameterError("entry probe needs n >= 3");
  if (delta <= 0.0) throw ParameterError("delta must be positive");
  if (!(opts.theta > 0.0 && opts.theta < 1.0))
    throw ParameterError("theta must lie strictly between 0 and 1");

  Environment env = Environment::lazy(p, d, seed);
  LazyClusterCache cache(env, opts.growth_cap);
  const BoxSpec box(n, d);
  const KernelParams kp{beta, d};
  CounterRng rng(seed, 1);

  EntryProbeResult res;
  res.p = p;
  res.beta = beta;
  res.d = d;
  res.n = n;
  res.delta = delta;
  res.theta = opts.theta;
  res.epsilon = opts.epsilon < 0.0 ? delta * std::log(1.0 / p) + 0.01 : opts.epsilon;
  res.seed = seed;
  res.size_threshold = delta * std::log(static_cast<double>(n));
  res.floor_exact = std::exp(res.size_threshold * std::log(p));  // p^(delta ln n)
  res.floor_power = std::pow(static_cast<double>(n), -res.epsilon);
  res.probe_budget = static_cast<std::int64_t>(
      std::ceil(std::pow(static_cast<double>(n), 1.0 - opts.theta)));

  ExploredSet explored;

  // Absorbs the cluster of `probe` together with its closed boundary (just
  // the site itself when closed), then fills any complement pockets the
  // union now encloses, committing their statuses.  Afterwards every open
  // explored site has all its neighbours explored, so the walk's kernel only
  // consumes fresh randomness through sites adjacent to the frontier.
  auto absorb = [&](const LatticePoint& probe) {
    const GrownCluster g = grow_cluster(env, probe, opts.growth_cap);
    std::vector<LatticePoint> h_sites;
    if (g.root_open) {
      h_sites = g.cluster;
      h_sites.insert(h_sites.end(), g.boundary.begin(), g.boundary.end());
    } else {
      h_sites.push_back(probe);
    }
    for (const LatticePoint& h : h_sites) explored.add(h);

    std::unordered_set<std::uint64_t> known_exterior;
    for (const LatticePoint& h : h_sites) {
      for (int a = 0; a < d; ++a) {
        for (int dir = -1; dir <= 1; dir += 2) {
          const LatticePoint y = h.neighbor(a, dir);
          if (explored.contains(y) || known_exterior.count(pack_site(y)) != 0) continue;
          const FloodResult fr = classify_component(y, explored, known_exterior);
          for (const LatticePoint& z : fr.component) {
            env.open(z);  // commit the pocket's randomness with the region
            explored.add(z);
          }
        }
      }
    }
  };

  absorb(LatticePoint::origin(d));
  internal_check(explored.contains(LatticePoint::origin(d)),
                 "entry probe start must be explored");

  LatticePoint x = LatticePoint::origin(d);
  std::set<std::int32_t> seen_labels;
  while (static_cast<std::int64_t>(res.records.size()) < res.probe_budget) {
    // Walk inside the explored set until the first exit.
    bool exited = false;
    while (res.total_walk_steps < opts.max_walk_steps) {
      const LocalKernel k = local_kernel(cache, x, kp);
      x = step(k, rng);
      ++res.total_walk_steps;
      if (!explored.contains(x)) {
        exited = true;
        break;
      }
    }
    if (!exited) {
      res.censored = true;
      break;
    }

    EntryProbeRecord rec;
    rec.probe_index = static_cast<std::int64_t>(res.records.size()) + 1;
    rec.exit_time = res.total_walk_steps;
    rec.exit_site = x;
    rec.cluster_size = cache.size_at(x);
    rec.found_big = static_cast<double>(rec.cluster_size) >= res.size_threshold;
    res.records.push_back(rec);
    if (rec.found_big) ++res.big_count;

    if (rec.cluster_size > 0) {
      const std::int32_t label = cache.label_at(x);
      internal_check(seen_labels.insert(label).second,
                     "entry probe revisited a previously absorbed cluster");
    }

    const std::size_t before = explored.packed.size();
    absorb(x);
    internal_check(explored.contains(x), "absorb must cover the probe site");
    internal_check(explored.packed.size() > before, "absorb must strictly grow the region");

    if (!box.contains(x)) {
      res.left_box = true;
      break;
    }
  }

  if (!res.records.empty())
    res.frequency = static_cast<double>(res.big_count) /
                    static_cast<double>(res.records.size());
  return res;
}

}
