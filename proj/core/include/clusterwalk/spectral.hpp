#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "clusterwalk/walk.hpp"

namespace clusterwalk {

inline constexpr std::int64_t kDenseStateLimit = 4096;

// Dense representation of the box-restricted chain: states are the sites of
// Lambda_n in box (row-major) order, kernel rows match walk_core's
// RestrictedKernel entrywise, pi is the normalized stationary vector.
struct ChainMatrix {
  BoxSpec box;
  Restriction convention = Restriction::selfloop;
  KernelParams params;
  double p = 0.0;          // environment parameters when known
  std::uint64_t seed = 0;
  Eigen::MatrixXd kernel;
  Eigen::VectorXd pi;
  std::vector<double> log_pi;              // log of normalized pi, for stable sqrt ratios
  std::vector<std::int64_t> cluster_size;  // |C(x)| per state, for closed-form Q(u)
  double log_normalizer = 0.0;

  std::int64_t states() const { return static_cast<std::int64_t>(kernel.rows()); }
};

ChainMatrix build_chain(const Environment& env, const BoxSpec& box, const KernelParams& kp,
                        Restriction convention = Restriction::selfloop,
                        ClusterScope scope = ClusterScope::margin,
                        std::int64_t dense_limit = kDenseStateLimit);
ChainMatrix build_chain(const ClusterMap& cmap, const BoxSpec& box, const KernelParams& kp,
                        Restriction convention = Restriction::selfloop,
                        std::int64_t dense_limit = kDenseStateLimit);

// Spectral gap of I - K: the kernel is symmetrized as D^{1/2} K D^{-1/2}
// (D = diag(pi)), whose asymmetry must vanish to 1e-12 for a reversible
// chain, and the gap is 1 minus the second-largest eigenvalue.  The
// continuized chain has generator K - I, so its gap is the same number.
double exact_gap(const ChainMatrix& chain);

struct CanonicalPath {
  std::vector<LatticePoint> sites;  // from x to y inclusive
  std::int64_t length() const { return static_cast<std::int64_t>(sites.size()) - 1; }
};

// The coordinate-ordered path from x to y: adjust the d-th coordinate first,
// then the (d-1)-th, ..., finishing with the first, each moved monotonically
// one unit at a time.  Length is the l1 distance, at most d*n inside a box.
CanonicalPath canonical_path(const LatticePoint& x, const LatticePoint& y, const BoxSpec& box);

// Undirected in-box edge, stored with a < b in state-index order.
struct EdgeRef {
  std::int64_t a = 0;
  std::int64_t b = 0;
  bool operator<(const EdgeRef& o) const { return a != o.a ? a < o.a : b < o.b; }
  bool operator==(const EdgeRef& o) const { return a == o.a && b == o.b; }
};

struct SpectralReport {
  std::int32_t n = 0;
  std::int32_t d = 0;
  double beta = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  Restriction convention = Restriction::selfloop;

  double gap = 0.0;                // exact spectral gap of I - K
  double a_constant = 0.0;         // max edge load A
  double bound_one_over_a = 0.0;   // Poincare lower bound 1/A <= gap
  double margin = 0.0;             // gap - 1/A (must be >= -1e-10)
  double gap_times_n2 = 0.0;
  EdgeRef worst_edge;              // lexicographically smallest maximizer
  LatticePoint worst_edge_from;
  LatticePoint worst_edge_to;
  bool approximate = false;        // true for the sampled-pairs estimator
  std::int64_t pairs_streamed = 0;
  std::map<EdgeRef, double> edge_loads;  // load term per edge (1/Q(u) * sum)
};

// Streams canonical paths over all ordered pairs (x != y), accumulates the
// load sum_{(x,y): u in gamma(x,y)} |gamma| pi(x) pi(y) per undirected edge
// u, divides by Q(u) and maximizes.  Q(u) is evaluated both as the averaged
// directed flow (pi(z1)P(z1,z2)+pi(z2)P(z2,z1))/2 and via the closed form
// e^{beta(|C(z1)|+|C(z2)|)}/Z; a relative disagreement beyond 1e-9 is an
// internal error.  Verifies gap >= 1/A - 1e-10 against exact_gap.
SpectralReport edge_load_bound(const ChainMatrix& chain, bool keep_edge_loads = true);

// Approximate variant for chains beyond the dense pair-streaming budget:
// samples `pairs` ordered pairs uniformly and Horvitz-Thompson-scales the
// loads.  Clearly labeled approximate in the report; no gap check.
SpectralReport edge_load_bound_sampled(const ChainMatrix& chain, std::int64_t pairs,
                                       std::uint64_t seed);

// Axis-aligned line through the box: all sites agreeing with `base` except
// on `axis`.  base is stored with the axis coordinate at the box minimum.
struct LineId {
  int axis = 0;
  LatticePoint base;
  bool operator<(const LineId& o) const {
    if (axis != o.axis) return axis < o.axis;
    return base < o.base;
  }
};

// For every axis-aligned line I~ in the box: sum_{x in I~} pi(x) * Z / n.
// Order-one values signal the column masses the path bound leans on; a line
// through a heavy cluster shows up as a spike.
std::map<LineId, double> column_mass_diagnostic(const ChainMatrix& chain);

// State indices of the half-space {z : z[axis] > site[axis]} (R_u) and of
// the in-line prefix {z : same off-axis coords, z[axis] <= site[axis]} (I_u)
// for the directed edge (site, site + e_axis).
std::vector<std::int64_t> r_set_indices(const BoxSpec& box, const LatticePoint& site, int axis);
std::vector<std::int64_t> i_set_indices(const BoxSpec& box, const LatticePoint& site, int axis);

}
