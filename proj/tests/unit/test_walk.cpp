#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"
#include "clusterwalk/walk.hpp"
#include "oracles.hpp"

using namespace clusterwalk;

namespace {

// hand-scripted size field for exercising kernels in isolation
struct FakeField {
  std::map<std::uint64_t, std::int64_t> sizes;
  std::int64_t size_at(const LatticePoint& x) const {
    const auto it = sizes.find(pack_site(x));
    return it == sizes.end() ? 0 : it->second;
  }
};

std::vector<std::vector<double>> dense_rows(const RestrictedKernel& rk) {
  const BoxSpec& box = rk.box();
  const std::size_t v = static_cast<std::size_t>(box.volume());
  std::vector<std::vector<double>> k(v, std::vector<double>(v, 0.0));
  for_each_site(box, [&](const LatticePoint& x) {
    const std::size_t i = static_cast<std::size_t>(box.index_of(x));
    const RestrictedKernel::Row row = rk.row(x);
    k[i][i] += row.self;
    for (int e = 0; e < row.count; ++e)
      k[i][static_cast<std::size_t>(box.index_of(row.nbr[static_cast<std::size_t>(e)].target))] +=
          row.nbr[static_cast<std::size_t>(e)].prob;
  });
  return k;
}

}  // namespace

TEST_CASE("a two-to-one weight ratio lands on (2/3, 1/3)") {
  FakeField field;
  field.sizes[pack_site(LatticePoint{1})] = 1;
  const KernelParams kp{std::log(2.0), 1};
  const LocalKernel k = local_kernel(field, LatticePoint{0}, kp);
  REQUIRE(k.count == 2);
  CHECK(k.neighbors[0] == LatticePoint{1});
  CHECK(k.neighbors[1] == LatticePoint{-1});
  CHECK(k.probability[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(k.probability[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("planar weights reproduce the naive softmax") {
  FakeField field;
  field.sizes[pack_site(LatticePoint{1, 0})] = 3;
  field.sizes[pack_site(LatticePoint{-1, 0})] = 1;
  const KernelParams kp{1.0, 2};
  const LocalKernel k = local_kernel(field, LatticePoint{0, 0}, kp);
  REQUIRE(k.count == 4);
  // neighbor order is +e1, -e1, +e2, -e2
  CHECK(k.neighbors[0] == LatticePoint{1, 0});
  CHECK(k.neighbors[1] == LatticePoint{-1, 0});
  CHECK(k.neighbors[2] == LatticePoint{0, 1});
  CHECK(k.neighbors[3] == LatticePoint{0, -1});
  const auto ref = oracle::naive_kernel(1.0, {3, 1, 0, 0});
  for (int i = 0; i < 4; ++i)
    CHECK(k.probability[static_cast<std::size_t>(i)] ==
          doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-14));
}

TEST_CASE("huge weights stay finite in log space") {
  FakeField field;
  field.sizes[pack_site(LatticePoint{1})] = 1000;  // e^1000 overflows a double
  const KernelParams kp{1.0, 1};
  const LocalKernel k = local_kernel(field, LatticePoint{0}, kp);
  CHECK(k.probability[0] == 1.0);
  CHECK(k.probability[1] == 0.0);

  FakeField pair;
  pair.sizes[pack_site(LatticePoint{1})] = 800;
  pair.sizes[pack_site(LatticePoint{-1})] = 800;
  const LocalKernel k2 = local_kernel(pair, LatticePoint{0}, kp);
  CHECK(k2.probability[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(k2.probability[1] == doctest::Approx(0.5).epsilon(1e-14));
  for (int i = 0; i < k2.count; ++i)
    CHECK(std::isfinite(k2.probability[static_cast<std::size_t>(i)]));
}

TEST_CASE("attraction is monotone in neighbor size") {
  FakeField field;
  field.sizes[pack_site(LatticePoint{1, 0})] = 5;
  field.sizes[pack_site(LatticePoint{-1, 0})] = 3;
  field.sizes[pack_site(LatticePoint{0, 1})] = 2;
  const LocalKernel k = local_kernel(field, LatticePoint{0, 0}, KernelParams{0.4, 2});
  CHECK(k.probability[0] > k.probability[1]);
  CHECK(k.probability[1] > k.probability[2]);
  CHECK(k.probability[2] > k.probability[3]);

  // no attraction: exactly uniform
  const LocalKernel flat = local_kernel(field, LatticePoint{0, 0}, KernelParams{0.0, 2});
  for (int i = 0; i < 4; ++i)
    CHECK(flat.probability[static_cast<std::size_t>(i)] == 0.25);
}

TEST_CASE("stepping follows the kernel frequencies") {
  FakeField field;
  field.sizes[pack_site(LatticePoint{1})] = 1;
  const LocalKernel k = local_kernel(field, LatticePoint{0}, KernelParams{std::log(2.0), 1});
  CounterRng rng(3, 1);
  int right = 0;
  const int n = 30000;
  for (int i = 0; i < n; ++i)
    if (step_index(k, rng) == 0) ++right;
  const double se = std::sqrt((2.0 / 3.0) * (1.0 / 3.0) / n);
  CHECK(std::abs(right / static_cast<double>(n) - 2.0 / 3.0) < 4 * se);

  LocalKernel empty;
  CHECK_THROWS_AS(step_index(empty, rng), ParameterError);
}

TEST_CASE("in-box kernels drop outside neighbors") {
  FakeField field;
  const BoxSpec box(2, 1);  // sites 0 and 1
  const LocalKernel k = local_kernel_in_box(field, LatticePoint{1}, KernelParams{0.5, 1}, box);
  REQUIRE(k.count == 1);
  CHECK(k.neighbors[0] == LatticePoint{0});
  CHECK(k.probability[0] == 1.0);

  const LocalKernel none =
      local_kernel_in_box(field, LatticePoint{0}, KernelParams{0.5, 1}, BoxSpec(1, 1));
  CHECK(none.count == 0);
}

TEST_CASE("the reversible weight is the site weight times its neighbor sum") {
  const BoxSpec region(6, 1);  // sites -2..3
  const Environment env = Environment::from_grid(region, {0, 1, 1, 0, 1, 0}, 0.4);
  const ClusterMap cmap = label_clusters(env);
  BoxSizeField field{&cmap, true};
  const KernelParams kp{0.7, 1};
  for (std::int32_t c = -1; c <= 2; ++c) {  // interior sites: both neighbors in region
    const LatticePoint x{c};
    long double expect = std::exp(0.7L * static_cast<long double>(field.size_at(x)));
    long double nb = 0.0L;
    nb += std::exp(0.7L * static_cast<long double>(field.size_at(LatticePoint{c + 1})));
    nb += std::exp(0.7L * static_cast<long double>(field.size_at(LatticePoint{c - 1})));
    expect *= nb;
    CHECK(std::exp(log_reversible_measure(field, x, kp)) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
  }
}

TEST_CASE("restricted rows are stochastic under both conventions") {
  const BoxSpec box(5, 2);
  const Environment env = Environment::sample(0.4, box, 8, {.margin = 3});
  const ClusterMap cmap = label_clusters(env);
  for (const Restriction mode : {Restriction::selfloop, Restriction::renormalize}) {
    const RestrictedKernel rk = restrict_to_box(cmap, KernelParams{0.6, 2}, box, mode);
    for_each_site(box, [&](const LatticePoint& x) {
      const RestrictedKernel::Row row = rk.row(x);
      double total = row.self;
      for (int e = 0; e < row.count; ++e) {
        total += row.nbr[static_cast<std::size_t>(e)].prob;
        CHECK(box.contains(row.nbr[static_cast<std::size_t>(e)].target));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      if (mode == Restriction::renormalize) CHECK(row.self == 0.0);
    });
    CHECK_THROWS_AS(rk.row(LatticePoint{box.axis_hi() + 1, 0}), OutOfRegionError);
  }
}

TEST_CASE("a one-site box is an absorbing state under either convention") {
  const BoxSpec box(1, 2);
  const Environment env = Environment::sample(0.3, box, 4, {.margin = 2});
  const ClusterMap cmap = label_clusters(env);
  for (const Restriction mode : {Restriction::selfloop, Restriction::renormalize}) {
    const RestrictedKernel rk = restrict_to_box(cmap, KernelParams{0.5, 2}, box, mode);
    const RestrictedKernel::Row row = rk.row(LatticePoint{0, 0});
    CHECK(row.count == 0);
    CHECK(row.self == 1.0);
  }
}

TEST_CASE("restriction needs sizes one ring past the box") {
  const BoxSpec box(4, 2);
  const Environment env = Environment::sample(
      0.4, box, 2, {.margin = 1, .escalate_on_shell_contact = false});
  const ClusterMap cmap = label_clusters(env);               // region is the 6-box
  CHECK_NOTHROW(restrict_to_box(cmap, KernelParams{0.5, 2}, box));
  // asking for a bigger core than the labeling covers must fail loudly
  CHECK_THROWS_AS(restrict_to_box(cmap, KernelParams{0.5, 2}, BoxSpec(5, 2)),
                  ParameterError);

  BoxSizeField strict{&cmap, false};
  CHECK_THROWS_AS(strict.size_at(LatticePoint{cmap.region.axis_hi() + 1, 0}),
                  OutOfRegionError);
}

TEST_CASE("detailed balance holds edge by edge") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int d = seed % 2 == 0 ? 1 : 2;
    const BoxSpec box(6, d);
    const Environment env = Environment::sample(0.4, box, seed, {.margin = 2});
    const ClusterMap cmap = label_clusters(env);
    for (const double beta : {0.0, 0.7, 2.0}) {
      for (const Restriction mode : {Restriction::selfloop, Restriction::renormalize}) {
        const KernelParams kp{beta, d};
        const ReversibleMeasure pi = stationary_box_measure(cmap, box, kp, mode);
        const RestrictedKernel rk = restrict_to_box(cmap, kp, box, mode);
        for_each_site(box, [&](const LatticePoint& x) {
          const RestrictedKernel::Row row = rk.row(x);
          for (int e = 0; e < row.count; ++e) {
            const LatticePoint y = row.nbr[static_cast<std::size_t>(e)].target;
            const double fwd = pi.at(x) * row.nbr[static_cast<std::size_t>(e)].prob;
            double back = 0.0;
            const RestrictedKernel::Row yrow = rk.row(y);
            for (int f = 0; f < yrow.count; ++f)
              if (yrow.nbr[static_cast<std::size_t>(f)].target == x)
                back = pi.at(y) * yrow.nbr[static_cast<std::size_t>(f)].prob;
            CHECK(std::abs(fwd - back) / std::max(fwd, 1e-300) < 1e-12);
          }
        });
      }
    }
  }
}

TEST_CASE("the box measure is exactly stationary for the restricted chain") {
  for (std::uint64_t seed = 11; seed <= 14; ++seed) {
    const BoxSpec box(4, 2);
    const Environment env = Environment::sample(0.4, box, seed, {.margin = 2});
    const ClusterMap cmap = label_clusters(env);
    for (const Restriction mode : {Restriction::selfloop, Restriction::renormalize}) {
      const KernelParams kp{0.8, 2};
      const ReversibleMeasure pi = stationary_box_measure(cmap, box, kp, mode);
      const auto k = dense_rows(restrict_to_box(cmap, kp, box, mode));
      const std::size_t v = static_cast<std::size_t>(box.volume());
      for (std::size_t j = 0; j < v; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < v; ++i)
          sum += pi.values[i] * k[i][j];
        CHECK(sum == doctest::Approx(pi.values[j]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("the closed-form measure matches power iteration") {
  const BoxSpec box(4, 2);
  const Environment env = Environment::sample(0.35, box, 19, {.margin = 2});
  const ClusterMap cmap = label_clusters(env);
  for (const Restriction mode : {Restriction::selfloop, Restriction::renormalize}) {
    const KernelParams kp{0.5, 2};
    const ReversibleMeasure pi = stationary_box_measure(cmap, box, kp, mode);
    const auto ref = oracle::power_stationary(dense_rows(restrict_to_box(cmap, kp, box, mode)));
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(pi.values[i] == doctest::Approx(ref[i]).epsilon(1e-8));
  }
}

TEST_CASE("simulation is reproducible and respects its box") {
  const Environment env = Environment::lazy(0.3, 2, 31);
  const KernelParams kp{0.5, 2};
  const WalkTrajectory a = simulate_discrete(env, kp, 500, 7);
  const WalkTrajectory b = simulate_discrete(env, kp, 500, 7);
  REQUIRE(a.positions.size() == 501);
  CHECK(a.steps() == 500);
  CHECK(a.positions == b.positions);
  CHECK(a.max_displacement == b.max_displacement);

  std::int64_t running = 0;
  for (std::size_t t = 0; t < a.positions.size(); ++t) {
    running = std::max(running, a.positions[t].linf_norm());
    CHECK(a.max_displacement[t] == running);
  }

  const WalkTrajectory c = simulate_discrete(env, kp, 500, 8);
  CHECK(a.positions != c.positions);

  const BoxSpec box(6, 2);
  const Environment eager = Environment::sample(0.3, box, 31, {.margin = 2});
  SimulateOptions opts;
  opts.restrict_box = &box;
  const WalkTrajectory boxed = simulate_discrete(eager, kp, 400, 7, opts);
  for (const LatticePoint& x : boxed.positions) CHECK(box.contains(x));

  SimulateOptions bad;
  bad.start = LatticePoint{100, 100};
  bad.restrict_box = &box;
  CHECK_THROWS_AS(simulate_discrete(eager, kp, 10, 7, bad), ParameterError);

  const WalkTrajectory still = simulate_discrete(env, kp, 0, 7);
  CHECK(still.steps() == 0);
  REQUIRE(still.positions.size() == 1);
  CHECK(still.positions[0] == LatticePoint{0, 0});
}

TEST_CASE("recorded cluster sizes match an independent cache") {
  const Environment env = Environment::lazy(0.3, 2, 41);
  SimulateOptions opts;
  opts.record_cluster_sizes = true;
  const WalkTrajectory traj = simulate_discrete(env, KernelParams{0.8, 2}, 200, 9, opts);
  REQUIRE(traj.cluster_sizes.size() == traj.positions.size());
  LazyClusterCache cache(env);
  for (std::size_t t = 0; t < traj.positions.size(); t += 17)
    CHECK(traj.cluster_sizes[t] == cache.size_at(traj.positions[t]));
}

TEST_CASE("with no attraction the walk diffuses like simple random walk") {
  const Environment env = Environment::lazy(0.3, 2, 55);
  LazyClusterCache cache(env);
  const KernelParams kp{0.0, 2};
  const std::int64_t t = 1024;
  const int replicas = 400;
  CounterRng base(55, 1);
  double mean_sq = 0.0;
  for (int r = 0; r < replicas; ++r) {
    CounterRng rng = base.child(static_cast<std::uint64_t>(r));
    LatticePoint last = LatticePoint::origin(2);
    run_walk(cache, kp, LatticePoint::origin(2), t, rng, nullptr, Restriction::selfloop,
             [&last](std::int64_t, const LatticePoint& x, std::int64_t) {
               last = x;
               return true;
             });
    const double dx = last[0], dy = last[1];
    mean_sq += dx * dx + dy * dy;
  }
  mean_sq /= replicas;
  // E|xi_t|^2 = t exactly for the simple walk; beta = 0 must reproduce it
  CHECK(std::abs(mean_sq - static_cast<double>(t)) < 0.15 * static_cast<double>(t));
}

TEST_CASE("the observer can stop a walk early") {
  const Environment env = Environment::lazy(0.3, 2, 61);
  LazyClusterCache cache(env);
  CounterRng rng(61, 1);
  int calls = 0;
  run_walk(cache, KernelParams{0.3, 2}, LatticePoint::origin(2), 1000, rng, nullptr,
           Restriction::selfloop,
           [&calls](std::int64_t t, const LatticePoint&, std::int64_t) {
             ++calls;
             return t < 5;
           });
  CHECK(calls == 6);  // t = 0..5
}

TEST_CASE("continuization preserves the embedded chain bitwise") {
  const Environment env = Environment::lazy(0.3, 2, 71);
  const WalkTrajectory traj = simulate_discrete(env, KernelParams{0.6, 2}, 300, 5);
  const WalkTrajectory cont = continuize(traj, 99);
  REQUIRE(cont.continuized());
  REQUIRE(cont.jump_times.size() == cont.positions.size());
  CHECK(cont.positions == traj.positions);
  CHECK(cont.max_displacement == traj.max_displacement);
  CHECK(cont.jump_times[0] == 0.0);
  for (std::size_t i = 1; i < cont.jump_times.size(); ++i)
    CHECK(cont.jump_times[i] > cont.jump_times[i - 1]);

  const WalkTrajectory stripped = strip_clocks(cont);
  CHECK_FALSE(stripped.continuized());
  CHECK(stripped.positions == traj.positions);

  CHECK_THROWS_AS(continuize(cont, 100), ParameterError);
  CHECK_THROWS_AS(jumps_by(traj, 1.0), ParameterError);

  CHECK(jumps_by(cont, 0.0) == 0);
  CHECK(jumps_by(cont, cont.jump_times.back()) == traj.steps());
  CHECK(jumps_by(cont, cont.jump_times.back() + 5.0) == traj.steps());
  const double mid = (cont.jump_times[10] + cont.jump_times[11]) / 2.0;
  CHECK(jumps_by(cont, mid) == 10);

  // a fresh clock seed relabels times but never the path
  const WalkTrajectory cont2 = continuize(traj, 100);
  CHECK(cont2.positions == traj.positions);
  CHECK(cont2.jump_times != cont.jump_times);
}

TEST_CASE("jump counts concentrate around the elapsed time") {
  const Environment env = Environment::lazy(0.3, 2, 81);
  const WalkTrajectory traj = simulate_discrete(env, KernelParams{0.0, 2}, 5000, 3);
  const WalkTrajectory cont = continuize(traj, 4);
  const std::int64_t n1000 = jumps_by(cont, 1000.0);
  CHECK(std::abs(static_cast<double>(n1000) - 1000.0) < 200.0);  // ~6 sigma for a Poisson clock
}
