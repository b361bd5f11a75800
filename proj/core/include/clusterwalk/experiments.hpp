#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/lattice.hpp"
#include "clusterwalk/walk.hpp"

namespace clusterwalk {

// ---------------------------------------------------------------------------
// Displacement exponent
//
// For a grid of dyadic times t we average log max_{s<=t} |xi(s)| over
// independent replicas and fit a line in log t over the upper half of the
// grid.  The slope estimates the growth exponent of the walk.

struct ExponentOptions {
  std::int64_t t_min = 64;
  std::int64_t growth_cap = kDefaultGrowthCap;
  int threads = 1;
  // When set, every replica walks in the same environment (fresh walk
  // randomness per replica); otherwise each replica draws its own.
  bool quenched = false;
};

struct ExponentEstimate {
  double p = 0.0;
  double beta = 0.0;
  int d = 0;
  std::int64_t t_max = 0;
  int replicas = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> time_grid;
  std::vector<double> mean_log_disp;  // mean over replicas of log max displacement
  int fit_from = 0;                   // first grid index included in the fit
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
};

ExponentEstimate estimate_exponent(double p, int d, double beta,
                                   std::int64_t t_max, int replicas,
                                   std::uint64_t seed,
                                   const ExponentOptions& opts = {});

// One estimate per beta, with decorrelated seed streams.
std::vector<ExponentEstimate> beta_sweep(double p, int d,
                                         const std::vector<double>& betas,
                                         std::int64_t t_max, int replicas,
                                         std::uint64_t seed,
                                         const ExponentOptions& opts = {});

// Fraction of replicas whose position at time t has sup-norm at least
// t^(1/2 + epsilon).  A slowdown shows up as this frequency dying with t.
struct DisplacementTailResult {
  double p = 0.0;
  double beta = 0.0;
  int d = 0;
  std::int64_t t = 0;
  int replicas = 0;
  double epsilon = 0.0;
  double threshold = 0.0;
  std::int64_t exceed_count = 0;
  double frequency = 0.0;
};

DisplacementTailResult displacement_tail(double p, int d, double beta,
                                         std::int64_t t, int replicas,
                                         double epsilon, std::uint64_t seed,
                                         const ExponentOptions& opts = {});

// ---------------------------------------------------------------------------
// Sojourns
//
// A sojourn is a maximal run of consecutive time indices the walk spends on
// one labelled cluster.  Closed sites carry no label and separate runs.

struct SojournRecord {
  std::int64_t entry_time = 0;   // first time index of the run
  std::int64_t length = 0;       // number of time indices in the run
  std::int32_t label = -1;
  std::int64_t cluster_size = 0;
  std::int64_t visit_index = 0;  // 1 for the first visit to this label, 2 for the next, ...
};

struct SojournStats {
  std::vector<SojournRecord> records;        // in time order
  std::map<std::int64_t, double> mean_length_by_size;
  std::map<std::int64_t, std::int64_t> visits_by_size;
  std::int64_t open_indices = 0;
  std::int64_t closed_indices = 0;
  std::int64_t total_indices = 0;  // == open + closed == trajectory length
};

namespace detail {
SojournStats sojourn_from_labels(const std::vector<std::int32_t>& labels,
                                 const std::vector<std::int64_t>& sizes);
}

// Field must answer label_at(x) (-1 on closed sites) and size_of_label(l).
template <class Field>
SojournStats sojourn_statistics(const WalkTrajectory& traj, Field& field) {
  std::vector<std::int32_t> labels;
  std::vector<std::int64_t> sizes;
  labels.reserve(traj.positions.size());
  sizes.reserve(traj.positions.size());
  std::map<std::int32_t, std::int64_t> size_of;
  for (const LatticePoint& x : traj.positions) {
    const std::int32_t l = field.label_at(x);
    labels.push_back(l);
    if (l >= 0) {
      auto it = size_of.find(l);
      if (it == size_of.end())
        it = size_of.emplace(l, field.size_of_label(l)).first;
      sizes.push_back(it->second);
    } else {
      sizes.push_back(0);
    }
  }
  return detail::sojourn_from_labels(labels, sizes);
}

// Lower bound on the expected sojourn on a cluster of size s >= 2: from any
// site of the cluster at most 2d-1 of the 2d neighbour weights can beat
// e^(beta*s), so each step leaves with probability at most
// (2d-1)/(2d-1 + e^(beta*s)).
double sojourn_floor(int d, double beta, std::int64_t size);

// ---------------------------------------------------------------------------
// Escape times
//
// Steps until the walk first reaches sup-norm distance >= n/4 from the
// origin, censored at censor_factor * n^2 steps.

struct EscapeOptions {
  std::int64_t censor_factor = 50;
  Restriction restriction = Restriction::selfloop;
  ClusterScope scope = ClusterScope::margin;
  int threads = 1;
};

struct EscapeSummary {
  std::int32_t n = 0;
  int d = 0;
  double beta = 0.0;
  int replicas = 0;
  std::int64_t censor_limit = 0;
  int censored = 0;
  std::vector<std::int64_t> steps;  // per replica, sorted
  double median_steps = 0.0;
  double q1_steps = 0.0;
  double q3_steps = 0.0;
  double median_over_n2 = 0.0;
  double far_mass = 0.0;           // stationary mass of the escape region
  std::int64_t far_site_count = 0;
};

EscapeSummary escape_time(const Environment& env, const BoxSpec& box,
                          const KernelParams& params, int replicas,
                          std::uint64_t seed, const EscapeOptions& opts = {});

// ---------------------------------------------------------------------------
// Entry probe
//
// Grows the explored region cluster by cluster.  Starting from the origin's
// cluster plus its outer boundary, the walk runs until it first exits the
// explored set; the cluster of the exit site (with its boundary, and any
// holes the union now encloses) is added, and the probe repeats.  Each exit
// lands on a site whose cluster is untouched by previous randomness, so the
// chance of finding a cluster of at least delta*ln(n) sites admits the
// closed-form floor p^(delta*ln(n)).

struct EntryProbeOptions {
  double theta = 0.25;    // step budget n^(1-theta) for the number of probes
  double epsilon = -1.0;  // comparison exponent; <0 means delta*ln(1/p) + 0.01
  std::int64_t growth_cap = kDefaultGrowthCap;
  std::int64_t max_walk_steps = 20'000'000;
};

struct EntryProbeRecord {
  std::int64_t probe_index = 0;  // 1-based
  std::int64_t exit_time = 0;    // walk time of the exit from the explored set
  LatticePoint exit_site;
  std::int64_t cluster_size = 0;  // 0 when the exit site is closed
  bool found_big = false;
};

struct EntryProbeResult {
  double p = 0.0;
  double beta = 0.0;
  int d = 0;
  std::int32_t n = 0;
  double delta = 0.0;
  double theta = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<EntryProbeRecord> records;
  std::int64_t probe_budget = 0;
  std::int64_t total_walk_steps = 0;
  std::int64_t big_count = 0;
  double frequency = 0.0;      // big_count / records.size()
  double size_threshold = 0.0; // delta * ln(n)
  double floor_exact = 0.0;    // p^(delta*ln(n))
  double floor_power = 0.0;    // n^(-epsilon)
  bool left_box = false;       // an exit landed outside the n-box
  bool censored = false;       // stopped on max_walk_steps instead
};

EntryProbeResult entry_probe(double p, int d, std::int32_t n, double delta,
                             double beta, std::uint64_t seed,
                             const EntryProbeOptions& opts = {});

}
