#include "clusterwalk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clusterwalk {

ChainMatrix build_chain(const ClusterMap& cmap, const BoxSpec& box, const KernelParams& kp,
                        Restriction convention, std::int64_t dense_limit) {
  const std::int64_t v = box.volume();
  if (v > dense_limit)
    throw CapacityError("box has " + std::to_string(v) + " states, beyond the dense limit of " +
                        std::to_string(dense_limit));
  KernelParams params = kp;
  params.d = box.d;

  ChainMatrix chain;
  chain.box = box;
  chain.convention = convention;
  chain.params = params;
  chain.kernel = Eigen::MatrixXd::Zero(v, v);
  chain.cluster_size.resize(static_cast<std::size_t>(v));

  const RestrictedKernel rk = restrict_to_box(cmap, params, box, convention);
  const BoxSizeField field = rk.field();
  for (std::int64_t i = 0; i < v; ++i) {
    const LatticePoint x = box.site_at(i);
    chain.cluster_size[static_cast<std::size_t>(i)] = field.size_at(x);
    const RestrictedKernel::Row row = rk.row(x);
    chain.kernel(i, i) = row.self;
    for (int s = 0; s < row.count; ++s)
      chain.kernel(i, box.index_of(row.nbr[static_cast<std::size_t>(s)].target)) =
          row.nbr[static_cast<std::size_t>(s)].prob;
  }

  const ReversibleMeasure pi = stationary_box_measure(cmap, box, params, convention);
  chain.pi = Eigen::VectorXd(v);
  for (std::int64_t i = 0; i < v; ++i) chain.pi(i) = pi.values[static_cast<std::size_t>(i)];
  chain.log_pi = pi.log_values;
  chain.log_normalizer = pi.log_normalizer;
  return chain;
}

ChainMatrix build_chain(const Environment& env, const BoxSpec& box, const KernelParams& kp,
                        Restriction convention, ClusterScope scope, std::int64_t dense_limit) {
  if (env.is_lazy()) throw ParameterError("build_chain needs a grid-backed environment");
  const ClusterMap cmap = label_clusters(env, scope);
  ChainMatrix chain = build_chain(cmap, box, kp, convention, dense_limit);
  chain.p = env.p();
  chain.seed = env.seed();
  return chain;
}

double exact_gap(const ChainMatrix& chain) {
  const std::int64_t v = chain.states();
  if (v < 2) throw ParameterError("spectral gap needs at least 2 states");

  // D^{1/2} K D^{-1/2}; the sqrt ratio comes from log pi differences so the
  // conjugation stays finite even when pi spans hundreds of orders.
  Eigen::MatrixXd s(v, v);
  for (std::int64_t i = 0; i < v; ++i)
    for (std::int64_t j = 0; j < v; ++j)
      s(i, j) = chain.kernel(i, j) *
                std::exp(0.5 * (chain.log_pi[static_cast<std::size_t>(i)] -
                                chain.log_pi[static_cast<std::size_t>(j)]));

  double asym = 0.0;
  for (std::int64_t i = 0; i < v; ++i)
    for (std::int64_t j = i + 1; j < v; ++j)
      asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
  internal_check(asym <= 1e-12, "symmetrized kernel asymmetry exceeds 1e-12; chain not reversible");

  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  internal_check(solver.info() == Eigen::Success, "eigensolver failed to converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  internal_check(ev(0) >= -1.0 - 1e-12 && ev(v - 1) <= 1.0 + 1e-12,
                 "eigenvalue outside [-1, 1] for a stochastic reversible kernel");
  internal_check(std::abs(ev(v - 1) - 1.0) <= 1e-10,
                 "top eigenvalue differs from 1; kernel rows not stochastic?");
  return 1.0 - ev(v - 2);
}

CanonicalPath canonical_path(const LatticePoint& x, const LatticePoint& y, const BoxSpec& box) {
  if (x.dim() != box.d || y.dim() != box.d) throw ParameterError("path endpoints must match box dimension");
  if (!box.contains(x) || !box.contains(y)) throw OutOfRegionError("path endpoints must lie in the box");
  CanonicalPath path;
  path.sites.push_back(x);
  LatticePoint cur = x;
  for (int a = box.d - 1; a >= 0; --a) {
    while (cur[a] != y[a]) {
      cur[a] += (y[a] > cur[a]) ? 1 : -1;
      path.sites.push_back(cur);
    }
  }
  return path;
}

namespace {

// Walks the canonical path x -> y and hands every traversed edge to f as
// (axis, lower endpoint) without materializing the path.
template <class F>
void stream_path_edges(const LatticePoint& x, const LatticePoint& y, int d, F&& f) {
  LatticePoint cur = x;
  for (int a = d - 1; a >= 0; --a) {
    while (cur[a] != y[a]) {
      if (y[a] > cur[a]) {
        f(a, cur);
        cur[a] += 1;
      } else {
        cur[a] -= 1;
        f(a, cur);
      }
    }
  }
}

std::int64_t l1_distance(const LatticePoint& x, const LatticePoint& y) {
  std::int64_t s = 0;
  for (int a = 0; a < x.dim(); ++a) s += std::abs(static_cast<std::int64_t>(x[a]) - y[a]);
  return s;
}

SpectralReport finish_report(const ChainMatrix& chain, const std::vector<double>& load,
                             bool keep_edge_loads, bool approximate, std::int64_t pairs_streamed,
                             bool check_gap) {
  const BoxSpec& box = chain.box;
  const std::int64_t v = chain.states();
  SpectralReport rep;
  rep.n = box.n;
  rep.d = box.d;
  rep.beta = chain.params.beta;
  rep.p = chain.p;
  rep.seed = chain.seed;
  rep.convention = chain.convention;
  rep.approximate = approximate;
  rep.pairs_streamed = pairs_streamed;

  rep.a_constant = 0.0;
  bool have_edge = false;
  for (int a = 0; a < box.d; ++a) {
    for (std::int64_t i = 0; i < v; ++i) {
      const double l = load[static_cast<std::size_t>(a) * static_cast<std::size_t>(v) +
                            static_cast<std::size_t>(i)];
      const LatticePoint x = box.site_at(i);
      const LatticePoint y = x.neighbor(a, +1);
      if (!box.contains(y)) continue;
      const std::int64_t j = box.index_of(y);

      // Q(u) two ways: averaged directed flow and the closed form.
      const double q_flow = 0.5 * (chain.pi(i) * chain.kernel(i, j) + chain.pi(j) * chain.kernel(j, i));
      const double q_closed =
          std::exp(chain.params.beta * static_cast<double>(chain.cluster_size[static_cast<std::size_t>(i)] +
                                                           chain.cluster_size[static_cast<std::size_t>(j)]) -
                   chain.log_normalizer);
      internal_check(std::abs(q_flow - q_closed) <= 1e-9 * std::max(q_flow, q_closed),
                     "edge flow Q(u) disagrees with its closed form");

      const double term = l / q_flow;
      const EdgeRef edge{std::min(i, j), std::max(i, j)};
      if (keep_edge_loads) rep.edge_loads[edge] = term;
      if (!have_edge || term > rep.a_constant) {
        // Iteration order is ascending (axis, index) = ascending EdgeRef, so
        // strict > keeps the lexicographically smallest maximizer on ties.
        have_edge = true;
        rep.a_constant = term;
        rep.worst_edge = edge;
        rep.worst_edge_from = box.site_at(edge.a);
        rep.worst_edge_to = box.site_at(edge.b);
      }
    }
  }
  internal_check(have_edge || v == 1, "box with more than one state has no edges");
  rep.bound_one_over_a = rep.a_constant > 0.0 ? 1.0 / rep.a_constant : 0.0;
  rep.gap = exact_gap(chain);
  rep.gap_times_n2 = rep.gap * static_cast<double>(box.n) * static_cast<double>(box.n);
  rep.margin = rep.gap - rep.bound_one_over_a;
  if (check_gap)
    internal_check(rep.margin >= -1e-10, "exact gap fell below the canonical-path bound 1/A");
  return rep;
}

}  // namespace

SpectralReport edge_load_bound(const ChainMatrix& chain, bool keep_edge_loads) {
  const BoxSpec& box = chain.box;
  const std::int64_t v = chain.states();
  if (v < 2) throw ParameterError("edge load bound needs at least 2 states");
  std::vector<double> load(static_cast<std::size_t>(box.d) * static_cast<std::size_t>(v), 0.0);

  for (std::int64_t ix = 0; ix < v; ++ix) {
    const LatticePoint x = box.site_at(ix);
    for (std::int64_t iy = 0; iy < v; ++iy) {
      if (ix == iy) continue;
      const LatticePoint y = box.site_at(iy);
      const double w = chain.pi(ix) * chain.pi(iy) * static_cast<double>(l1_distance(x, y));
      stream_path_edges(x, y, box.d, [&](int axis, const LatticePoint& lo) {
        load[static_cast<std::size_t>(axis) * static_cast<std::size_t>(v) +
             static_cast<std::size_t>(box.index_of(lo))] += w;
      });
    }
  }
  return finish_report(chain, load, keep_edge_loads, /*approximate=*/false,
                       /*pairs_streamed=*/v * (v - 1), /*check_gap=*/true);
}

SpectralReport edge_load_bound_sampled(const ChainMatrix& chain, std::int64_t pairs,
                                       std::uint64_t seed) {
  const BoxSpec& box = chain.box;
  const std::int64_t v = chain.states();
  if (v < 2) throw ParameterError("edge load bound needs at least 2 states");
  if (pairs < 1) throw ParameterError("sampled edge load bound needs >= 1 pairs");
  std::vector<double> load(static_cast<std::size_t>(box.d) * static_cast<std::size_t>(v), 0.0);

  CounterRng rng(seed, /*stream=*/3);
  const double scale = static_cast<double>(v) * static_cast<double>(v - 1) / static_cast<double>(pairs);
  for (std::int64_t k = 0; k < pairs; ++k) {
    const std::int64_t ix = static_cast<std::int64_t>(rng.next_unit() * static_cast<double>(v));
    std::int64_t iy = static_cast<std::int64_t>(rng.next_unit() * static_cast<double>(v - 1));
    if (iy >= ix) ++iy;  // uniform over ordered pairs with iy != ix
    const LatticePoint x = box.site_at(ix);
    const LatticePoint y = box.site_at(iy);
    const double w = scale * chain.pi(ix) * chain.pi(iy) * static_cast<double>(l1_distance(x, y));
    stream_path_edges(x, y, box.d, [&](int axis, const LatticePoint& lo) {
      load[static_cast<std::size_t>(axis) * static_cast<std::size_t>(v) +
           static_cast<std::size_t>(box.index_of(lo))] += w;
    });
  }
  return finish_report(chain, load, /*keep_edge_loads=*/false, /*approximate=*/true,
                       /*pairs_streamed=*/pairs, /*check_gap=*/false);
}

std::map<LineId, double> column_mass_diagnostic(const ChainMatrix& chain) {
  const BoxSpec& box = chain.box;
  const std::int64_t v = chain.states();

  // Collect log masses per line, then logsumexp each line.
  std::map<LineId, std::vector<double>> lines;
  for (std::int64_t i = 0; i < v; ++i) {
    const LatticePoint x = box.site_at(i);
    const double log_unnorm = chain.log_pi[static_cast<std::size_t>(i)] + chain.log_normalizer;
    for (int a = 0; a < box.d; ++a) {
      LineId id;
      id.axis = a;
      id.base = x;
      id.base[a] = box.axis_lo();
      lines[id].push_back(log_unnorm);
    }
  }
  std::map<LineId, double> out;
  for (auto& [id, vals] : lines) {
    double m = vals[0];
    for (double lv : vals) m = std::max(m, lv);
    double s = 0.0;
    for (double lv : vals) s += std::exp(lv - m);
    out[id] = std::exp(m + std::log(s) - std::log(static_cast<double>(box.n)));
  }
  return out;
}

std::vector<std::int64_t> r_set_indices(const BoxSpec& box, const LatticePoint& site, int axis) {
  if (!box.contains(site)) throw OutOfRegionError("edge site outside box");
  std::vector<std::int64_t> out;
  const std::int64_t v = box.volume();
  for (std::int64_t i = 0; i < v; ++i)
    if (box.site_at(i)[axis] > site[axis]) out.push_back(i);
  return out;
}

std::vector<std::int64_t> i_set_indices(const BoxSpec& box, const LatticePoint& site, int axis) {
  if (!box.contains(site)) throw OutOfRegionError("edge site outside box");
  std::vector<std::int64_t> out;
  const std::int64_t v = box.volume();
  for (std::int64_t i = 0; i < v; ++i) {
    const LatticePoint x = box.site_at(i);
    bool same_transverse = true;
    for (int a = 0; a < box.d; ++a)
      if (a != axis && x[a] != site[a]) { same_transverse = false; break; }
    if (same_transverse && x[axis] <= site[axis]) out.push_back(i);
  }
  return out;
}

}
