#include <benchmark/benchmark.h>

#include "clusterwalk/clusters.hpp"
#include "clusterwalk/environment.hpp"
#include "clusterwalk/spectral.hpp"
#include "clusterwalk/walk.hpp"

namespace {

using namespace clusterwalk;

void BM_WalkSteps(benchmark::State& state) {
  const double beta = static_cast<double>(state.range(0)) / 10.0;
  Environment env = Environment::lazy(0.3, 2, 42);
  LazyClusterCache cache(env);
  const KernelParams kp{beta, 2};
  CounterRng rng(42, 1);
  LatticePoint x = LatticePoint::origin(2);
  for (auto _ : state) {
    const LocalKernel k = local_kernel(cache, x, kp);
    x = step(k, rng);
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WalkSteps)->Arg(0)->Arg(5)->Arg(20);

void BM_LabelClusters(benchmark::State& state) {
  const std::int32_t n = static_cast<std::int32_t>(state.range(0));
  const Environment env = Environment::sample(0.3, BoxSpec(n, 2), 7);
  for (auto _ : state) {
    ClusterMap cmap = label_clusters(env);
    benchmark::DoNotOptimize(cmap.sizes.data());
  }
  state.SetItemsProcessed(state.iterations() * env.region().volume());
}
BENCHMARK(BM_LabelClusters)->Arg(64)->Arg(256);

void BM_ExactGap(benchmark::State& state) {
  const std::int32_t n = static_cast<std::int32_t>(state.range(0));
  const Environment env = Environment::sample(0.3, BoxSpec(n, 2), 7);
  const ChainMatrix chain = build_chain(env, BoxSpec(n, 2), KernelParams{0.5, 2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_gap(chain));
  }
}
BENCHMARK(BM_ExactGap)->Arg(8)->Arg(16);

void BM_EdgeLoadBound(benchmark::State& state) {
  const std::int32_t n = static_cast<std::int32_t>(state.range(0));
  const Environment env = Environment::sample(0.3, BoxSpec(n, 2), 7);
  const ChainMatrix chain = build_chain(env, BoxSpec(n, 2), KernelParams{0.5, 2});
  for (auto _ : state) {
    SpectralReport rep = edge_load_bound(chain, false);
    benchmark::DoNotOptimize(rep.a_constant);
  }
}
BENCHMARK(BM_EdgeLoadBound)->Arg(8)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
