#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <vector>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"
#include "clusterwalk/lattice.hpp"
#include "clusterwalk/rng.hpp"

namespace clusterwalk {

// Anything that can answer "how big is the cluster at x" (0 on closed sites).
template <class F>
concept ClusterSizeField = requires(F f, const LatticePoint& x) {
  { f.size_at(x) } -> std::convertible_to<std::int64_t>;
};

struct KernelParams {
  double beta = 0.0;
  int d = 0;
};

// One-site transition rule: each of the 2d lattice neighbors y of x carries
// weight e^{beta |C(y)|}.  Weights are kept in log form and probabilities
// come from a max-shifted softmax, so beta*|C| far beyond exp() range stays
// finite; weight(i) itself may overflow to inf for such extremes and is only
// meant for reporting at moderate scales.
struct LocalKernel {
  LatticePoint site;
  int count = 0;  // 2d for free kernels, possibly fewer for in-box ones
  std::array<LatticePoint, 2 * kMaxDim> neighbors;
  std::array<double, 2 * kMaxDim> log_weight;
  std::array<double, 2 * kMaxDim> probability;

  double weight(int i) const { return std::exp(log_weight[static_cast<std::size_t>(i)]); }
};

namespace detail {
inline void finish_kernel(LocalKernel& k) {
  double m = k.log_weight[0];
  for (int i = 1; i < k.count; ++i) m = std::max(m, k.log_weight[static_cast<std::size_t>(i)]);
  double total = 0.0;
  for (int i = 0; i < k.count; ++i) {
    const double w = std::exp(k.log_weight[static_cast<std::size_t>(i)] - m);
    k.probability[static_cast<std::size_t>(i)] = w;
    total += w;
  }
  for (int i = 0; i < k.count; ++i) k.probability[static_cast<std::size_t>(i)] /= total;
}
}  // namespace detail

// Neighbor order: +e1, -e1, +e2, -e2, ...
template <ClusterSizeField F>
LocalKernel local_kernel(F& field, const LatticePoint& x, const KernelParams& kp) {
  LocalKernel k;
  k.site = x;
  const int d = x.dim();
  k.count = 2 * d;
  int i = 0;
  for (int a = 0; a < d; ++a) {
    for (int dir = 1; dir >= -1; dir -= 2) {
      const LatticePoint y = x.neighbor(a, dir);
      k.neighbors[static_cast<std::size_t>(i)] = y;
      k.log_weight[static_cast<std::size_t>(i)] = kp.beta * static_cast<double>(field.size_at(y));
      ++i;
    }
  }
  detail::finish_kernel(k);
  return k;
}

// Kernel over the in-box neighbors only (the `renormalize` convention).
template <ClusterSizeField F>
LocalKernel local_kernel_in_box(F& field, const LatticePoint& x, const KernelParams& kp, const BoxSpec& box) {
  LocalKernel k;
  k.site = x;
  k.count = 0;
  const int d = x.dim();
  for (int a = 0; a < d; ++a) {
    for (int dir = 1; dir >= -1; dir -= 2) {
      const LatticePoint y = x.neighbor(a, dir);
      if (!box.contains(y)) continue;
      k.neighbors[static_cast<std::size_t>(k.count)] = y;
      k.log_weight[static_cast<std::size_t>(k.count)] = kp.beta * static_cast<double>(field.size_at(y));
      ++k.count;
    }
  }
  if (k.count > 0) detail::finish_kernel(k);
  return k;
}

int step_index(const LocalKernel& k, CounterRng& rng);
LatticePoint step(const LocalKernel& k, CounterRng& rng);

// log of the unnormalized reversible measure pi(x) = e^{beta|C(x)|} * sum_z
// e^{beta|C(z)|} over all 2d lattice neighbors z of x.
template <ClusterSizeField F>
double log_reversible_measure(F& field, const LatticePoint& x, const KernelParams& kp) {
  const int d = x.dim();
  double lw[2 * kMaxDim];
  double m = -1e300;
  int i = 0;
  for (int a = 0; a < d; ++a) {
    for (int dir = 1; dir >= -1; dir -= 2) {
      lw[i] = kp.beta * static_cast<double>(field.size_at(x.neighbor(a, dir)));
      m = std::max(m, lw[i]);
      ++i;
    }
  }
  double s = 0.0;
  for (int j = 0; j < i; ++j) s += std::exp(lw[j] - m);
  return kp.beta * static_cast<double>(field.size_at(x)) + m + std::log(s);
}

// In-box variant used by the renormalize convention; with no in-box
// neighbor the sum is empty and the measure is zero (-inf in log form).
template <ClusterSizeField F>
double log_reversible_measure_in_box(F& field, const LatticePoint& x, const KernelParams& kp, const BoxSpec& box) {
  double lw[2 * kMaxDim];
  double m = -1e300;
  int i = 0;
  for (int a = 0; a < x.dim(); ++a) {
    for (int dir = 1; dir >= -1; dir -= 2) {
      const LatticePoint y = x.neighbor(a, dir);
      if (!box.contains(y)) continue;
      lw[i] = kp.beta * static_cast<double>(field.size_at(y));
      m = std::max(m, lw[i]);
      ++i;
    }
  }
  if (i == 0) return -std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (int j = 0; j < i; ++j) s += std::exp(lw[j] - m);
  return kp.beta * static_cast<double>(field.size_at(x)) + m + std::log(s);
}

template <ClusterSizeField F>
double reversible_measure(F& field, const LatticePoint& x, const KernelParams& kp) {
  return std::exp(log_reversible_measure(field, x, kp));
}

enum class Restriction { selfloop, renormalize };
const char* restriction_name(Restriction r);
Restriction restriction_from_name(const std::string& name);

// Normalized stationary measure pi^(n) on a box, with log Z retained.  Under
// the self-loop convention the neighbor sums in pi run over the full lattice
// (and the reflected kernel leaves this measure exactly invariant); under
// renormalize they run over in-box neighbors only.
struct ReversibleMeasure {
  BoxSpec box;
  Restriction convention = Restriction::selfloop;
  std::vector<double> values;      // normalized, indexed by box order
  std::vector<double> log_values;  // log of normalized values
  double log_normalizer = 0.0;     // log Z of the unnormalized measure

  double at(const LatticePoint& x) const { return values[static_cast<std::size_t>(box.index_of(x))]; }
};

ReversibleMeasure stationary_box_measure(const ClusterMap& cmap, const BoxSpec& box,
                                         const KernelParams& kp,
                                         Restriction convention = Restriction::selfloop);

// Kernel-size lookups for a box chain: sizes come from the cluster map;
// sites beyond the map's region count as closed when the map was built with
// the truncated scope (outside-the-box-is-closed universe).
struct BoxSizeField {
  const ClusterMap* cmap;
  bool outside_closed;

  std::int64_t size_at(const LatticePoint& x) const {
    if (cmap->region.contains(x)) return cmap->size_at(x);
    if (outside_closed) return 0;
    throw OutOfRegionError("kernel needs cluster size at " + x.to_string() +
                           " outside the labeled region; sample with margin >= 1");
  }
};

// Explicit transition rows of the box-restricted chain.
class RestrictedKernel {
public:
  RestrictedKernel(const ClusterMap& cmap, const BoxSpec& box, const KernelParams& kp,
                   Restriction mode);

  struct Entry {
    LatticePoint target;
    double prob;
  };
  struct Row {
    std::array<Entry, 2 * kMaxDim> nbr;
    int count = 0;
    double self = 0.0;
  };
  Row row(const LatticePoint& x) const;

  const BoxSpec& box() const { return box_; }
  Restriction mode() const { return mode_; }
  const KernelParams& params() const { return kp_; }
  const ClusterMap& cluster_map() const { return *cmap_; }
  BoxSizeField field() const { return field_; }

private:
  const ClusterMap* cmap_;
  BoxSpec box_;
  KernelParams kp_;
  Restriction mode_;
  BoxSizeField field_;
};

RestrictedKernel restrict_to_box(const ClusterMap& cmap, const KernelParams& kp,
                                 const BoxSpec& box, Restriction mode = Restriction::selfloop);

struct SimulateOptions {
  LatticePoint start;  // dims 0 means "origin of the environment's dimension"
  std::int64_t growth_cap = kDefaultGrowthCap;
  const BoxSpec* restrict_box = nullptr;
  Restriction restriction = Restriction::selfloop;
  bool record_cluster_sizes = false;
};

struct WalkTrajectory {
  int dim = 0;
  double beta = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<LatticePoint> positions;          // t = 0..T
  std::vector<std::int64_t> max_displacement;   // running max of Linf norm
  std::vector<std::int64_t> cluster_sizes;      // only when recorded
  std::vector<double> jump_times;               // continuized walks only

  bool continuized() const { return !jump_times.empty(); }
  std::int64_t steps() const { return static_cast<std::int64_t>(positions.size()) - 1; }
};

WalkTrajectory simulate_discrete(const Environment& env, const KernelParams& kp,
                                 std::int64_t t_max, std::uint64_t seed,
                                 const SimulateOptions& opts = {});

// Attaches i.i.d. Exponential(1) holding times to a discrete trajectory;
// the embedded chain (the position sequence) is preserved bitwise.
WalkTrajectory continuize(const WalkTrajectory& traj, std::uint64_t seed);
WalkTrajectory strip_clocks(const WalkTrajectory& traj);
// Number of jumps of a continuized trajectory up to time t.
std::int64_t jumps_by(const WalkTrajectory& traj, double t);

// Streaming walk driver shared by the experiments: calls obs(t, x, max_disp)
// after every step (and once at t=0); stop early by returning false.
template <ClusterSizeField F, class Observer>
void run_walk(F& field, const KernelParams& kp, const LatticePoint& start, std::int64_t t_max,
              CounterRng& rng, const BoxSpec* box, Restriction mode, Observer&& obs) {
  LatticePoint x = start;
  std::int64_t max_disp = x.linf_norm();
  if (!obs(std::int64_t{0}, x, max_disp)) return;
  for (std::int64_t t = 1; t <= t_max; ++t) {
    if (box != nullptr && mode == Restriction::renormalize) {
      const LocalKernel k = local_kernel_in_box(field, x, kp, *box);
      if (k.count > 0) x = step(k, rng);
    } else {
      const LocalKernel k = local_kernel(field, x, kp);
      const LatticePoint y = step(k, rng);
      if (box == nullptr || box->contains(y)) x = y;  // out-of-box mass folds into a self-loop
    }
    max_disp = std::max(max_disp, x.linf_norm());
    if (!obs(t, x, max_disp)) return;
  }
}

}
