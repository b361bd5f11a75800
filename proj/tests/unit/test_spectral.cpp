#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"
#include "clusterwalk/spectral.hpp"

using namespace clusterwalk;

namespace {

Environment closed_grid(std::int32_t n, std::int32_t d) {
  const BoxSpec box(n, d);
  return Environment::from_grid(box,
                                std::vector<std::uint8_t>(static_cast<std::size_t>(box.volume()), 0),
                                0.3);
}

}  // namespace

TEST_CASE("the chain matrix reproduces the restricted kernel rows") {
  const BoxSpec box(4, 2);
  const Environment env = Environment::sample(0.4, box, 5, {.margin = 2});
  const ClusterMap cmap = label_clusters(env);
  const KernelParams kp{0.6, 2};
  const ChainMatrix chain = build_chain(cmap, box, kp);
  const RestrictedKernel rk = restrict_to_box(cmap, kp, box);
  const ReversibleMeasure pi = stationary_box_measure(cmap, box, kp);

  REQUIRE(chain.states() == box.volume());
  for_each_site(box, [&](const LatticePoint& x) {
    const std::int64_t i = box.index_of(x);
    const RestrictedKernel::Row row = rk.row(x);
    double self = 0.0;
    std::map<std::int64_t, double> offdiag;
    for (int e = 0; e < row.count; ++e)
      offdiag[box.index_of(row.nbr[static_cast<std::size_t>(e)].target)] =
          row.nbr[static_cast<std::size_t>(e)].prob;
    self = row.self;
    for (std::int64_t j = 0; j < chain.states(); ++j) {
      const double expect = j == i ? self : (offdiag.count(j) ? offdiag[j] : 0.0);
      CHECK(chain.kernel(i, j) == doctest::Approx(expect).epsilon(1e-15));
    }
    CHECK(chain.pi(i) == doctest::Approx(pi.values[static_cast<std::size_t>(i)]).epsilon(1e-14));
    CHECK(chain.cluster_size[static_cast<std::size_t>(i)] == cmap.size_at(x));
  });
}

TEST_CASE("the empty line has gap 1 - cos(pi/n)") {
  for (const std::int32_t n : {4, 8}) {
    const ChainMatrix chain =
        build_chain(closed_grid(n, 1), BoxSpec(n, 1), KernelParams{0.3, 1});
    const double gap = exact_gap(chain);
    CHECK(gap == doctest::Approx(1.0 - std::cos(M_PI / n)).epsilon(1e-12));
  }
}

TEST_CASE("the empty plane halves the line gap") {
  const std::int32_t n = 4;
  const ChainMatrix chain =
      build_chain(closed_grid(n, 2), BoxSpec(n, 2), KernelParams{0.3, 2});
  CHECK(exact_gap(chain) == doctest::Approx(0.5 * (1.0 - std::cos(M_PI / n))).epsilon(1e-12));
}

TEST_CASE("a single state has no gap to measure") {
  const ChainMatrix chain = build_chain(closed_grid(1, 1), BoxSpec(1, 1), KernelParams{0.3, 1});
  CHECK_THROWS_AS(exact_gap(chain), ParameterError);
}

TEST_CASE("the dense state budget is enforced") {
  const BoxSpec box(70, 2);
  const Environment env = Environment::sample(0.3, box, 1);
  CHECK_THROWS_AS(build_chain(env, box, KernelParams{0.1, 2}), CapacityError);
}

TEST_CASE("canonical paths adjust the last coordinate first, monotonically") {
  const BoxSpec box(4, 2);
  const CanonicalPath path = canonical_path(LatticePoint{-1, -1}, LatticePoint{1, 1}, box);
  const std::vector<LatticePoint> expect = {
      {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  REQUIRE(path.sites.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(path.sites[i] == expect[i]);
  CHECK(path.length() == 4);

  const CanonicalPath self = canonical_path(LatticePoint{0, 0}, LatticePoint{0, 0}, box);
  CHECK(self.length() == 0);

  // every pair's path stays inside the box and has l1 length
  for_each_site(box, [&](const LatticePoint& x) {
    for_each_site(box, [&](const LatticePoint& y) {
      const CanonicalPath q = canonical_path(x, y, box);
      std::int64_t l1 = 0;
      for (int a = 0; a < 2; ++a) l1 += std::abs(static_cast<std::int64_t>(x[a]) - y[a]);
      CHECK(q.length() == l1);
      for (const LatticePoint& s : q.sites) CHECK(box.contains(s));
      for (std::size_t i = 1; i < q.sites.size(); ++i) {
        std::int64_t step = 0;
        for (int a = 0; a < 2; ++a)
          step += std::abs(static_cast<std::int64_t>(q.sites[i][a]) - q.sites[i - 1][a]);
        CHECK(step == 1);
      }
    });
  });
}

TEST_CASE("the two-state frozen chain pins the path constant at exactly 2") {
  const ChainMatrix chain = build_chain(closed_grid(2, 1), BoxSpec(2, 1), KernelParams{0.7, 1});
  const SpectralReport rep = edge_load_bound(chain);
  CHECK(rep.a_constant == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.bound_one_over_a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.gap == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.margin == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.pairs_streamed == 2);
  REQUIRE(rep.edge_loads.size() == 1);
  CHECK(rep.worst_edge == EdgeRef{0, 1});
  CHECK_FALSE(rep.approximate);
}

TEST_CASE("edge loads match a direct double enumeration on the empty plane") {
  const std::int32_t n = 4;
  const BoxSpec box(n, 2);
  const ChainMatrix chain = build_chain(closed_grid(n, 2), box, KernelParams{0.0, 2});
  const SpectralReport rep = edge_load_bound(chain);

  // pi is exactly uniform here, so the load of an edge is
  // (1/Q) * sum over ordered pairs routed through it of |path| / v^2.
  const double v = static_cast<double>(box.volume());
  std::map<EdgeRef, double> loads;
  for_each_site(box, [&](const LatticePoint& x) {
    for_each_site(box, [&](const LatticePoint& y) {
      if (x == y) return;
      const CanonicalPath path = canonical_path(x, y, box);
      const double w = static_cast<double>(path.length()) / (v * v);
      for (std::size_t i = 1; i < path.sites.size(); ++i) {
        std::int64_t a = box.index_of(path.sites[i - 1]);
        std::int64_t b = box.index_of(path.sites[i]);
        if (a > b) std::swap(a, b);
        loads[EdgeRef{a, b}] += w;
      }
    });
  });
  // Q(u) = pi(z1) K(z1,z2) read straight off the chain
  for (auto& [edge, load] : loads) {
    const double q = chain.pi(edge.a) * chain.kernel(edge.a, edge.b);
    load /= q;
  }

  REQUIRE(rep.edge_loads.size() == loads.size());
  double max_load = 0.0;
  for (const auto& [edge, load] : loads) {
    REQUIRE(rep.edge_loads.count(edge) == 1);
    CHECK(rep.edge_loads.at(edge) == doctest::Approx(load).epsilon(1e-12));
    max_load = std::max(max_load, load);
  }
  CHECK(rep.a_constant == doctest::Approx(max_load).epsilon(1e-12));
}

TEST_CASE("equal loads break ties toward the smallest edge") {
  const ChainMatrix chain = build_chain(closed_grid(3, 1), BoxSpec(3, 1), KernelParams{0.0, 1});
  const SpectralReport rep = edge_load_bound(chain);
  // the two edges carry symmetric traffic; the report must pick (0,1)
  CHECK(rep.edge_loads.size() == 2);
  CHECK(rep.edge_loads.at(EdgeRef{0, 1}) ==
        doctest::Approx(rep.edge_loads.at(EdgeRef{1, 2})).epsilon(1e-12));
  CHECK(rep.worst_edge == EdgeRef{0, 1});
}

TEST_CASE("the flow identity holds on a structured line") {
  // statuses [1,1,0,1] on sites -1..2: pi(z1)K(z1,z2) must equal the
  // closed form exp(beta(|C(z1)|+|C(z2)|))/Z on every in-box edge
  const BoxSpec box(4, 1);
  const Environment env = Environment::from_grid(box, {1, 1, 0, 1}, 0.4);
  const ClusterMap cmap = label_clusters(env);
  const KernelParams kp{0.8, 1};
  const ChainMatrix chain = build_chain(cmap, box, kp);
  for (std::int64_t i = 0; i + 1 < chain.states(); ++i) {
    const double q_chain = chain.pi(i) * chain.kernel(i, i + 1);
    const double q_closed =
        std::exp(kp.beta * static_cast<double>(chain.cluster_size[static_cast<std::size_t>(i)] +
                                                chain.cluster_size[static_cast<std::size_t>(i) + 1]) -
                 chain.log_normalizer);
    CHECK(q_chain == doctest::Approx(q_closed).epsilon(1e-12));
    // and reversibility closes the loop from the other direction
    CHECK(chain.pi(i + 1) * chain.kernel(i + 1, i) == doctest::Approx(q_chain).epsilon(1e-12));
  }
}

TEST_CASE("the poincare bound holds on random planar instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const BoxSpec box(6, 2);
    const Environment env = Environment::sample(0.3, box, seed);
    const ChainMatrix chain = build_chain(env, box, KernelParams{0.3, 2});
    const SpectralReport with_loads = edge_load_bound(chain, true);
    CHECK(with_loads.gap >= with_loads.bound_one_over_a - 1e-10);
    CHECK(with_loads.margin >= -1e-10);
    CHECK(with_loads.gap_times_n2 ==
          doctest::Approx(with_loads.gap * 36.0).epsilon(1e-12));

    const SpectralReport without = edge_load_bound(chain, false);
    CHECK(without.edge_loads.empty());
    CHECK(without.a_constant == doctest::Approx(with_loads.a_constant).epsilon(1e-12));
    CHECK(without.worst_edge == with_loads.worst_edge);
  }
}

TEST_CASE("the sampled estimator brackets the exact constant") {
  const BoxSpec box(4, 2);
  const Environment env = Environment::sample(0.3, box, 9);
  const ChainMatrix chain = build_chain(env, box, KernelParams{0.2, 2});
  const SpectralReport exact = edge_load_bound(chain);
  const SpectralReport approx = edge_load_bound_sampled(chain, 20000, 17);
  CHECK(approx.approximate);
  CHECK(approx.pairs_streamed == 20000);
  CHECK(approx.a_constant > 0.4 * exact.a_constant);
  CHECK(approx.a_constant < 2.5 * exact.a_constant);
}

TEST_CASE("column masses are flat when attraction is off") {
  const BoxSpec box(4, 2);
  const Environment env = Environment::sample(0.4, box, 3);
  const ChainMatrix chain = build_chain(env, box, KernelParams{0.0, 2});
  const auto masses = column_mass_diagnostic(chain);
  CHECK(masses.size() == 8);  // n lines per axis in the plane
  for (const auto& [line, mass] : masses)
    CHECK(mass == doctest::Approx(4.0).epsilon(1e-12));  // 2d with every weight at 1
}

TEST_CASE("half-space and prefix index sets are exact on a small box") {
  const BoxSpec box(3, 2);  // sites -1..1 per axis
  const auto r = r_set_indices(box, LatticePoint{0, 0}, 0);
  std::vector<std::int64_t> expect_r = {
      box.index_of(LatticePoint{1, -1}), box.index_of(LatticePoint{1, 0}),
      box.index_of(LatticePoint{1, 1})};
  std::sort(expect_r.begin(), expect_r.end());
  std::vector<std::int64_t> got_r(r.begin(), r.end());
  std::sort(got_r.begin(), got_r.end());
  CHECK(got_r == expect_r);

  const auto i = i_set_indices(box, LatticePoint{0, 0}, 0);
  std::vector<std::int64_t> expect_i = {
      box.index_of(LatticePoint{-1, 0}), box.index_of(LatticePoint{0, 0})};
  std::sort(expect_i.begin(), expect_i.end());
  std::vector<std::int64_t> got_i(i.begin(), i.end());
  std::sort(got_i.begin(), got_i.end());
  CHECK(got_i == expect_i);
}
