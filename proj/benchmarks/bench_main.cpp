#include <benchmark/benchmark.h>

#include "nsm/dynamics.hpp"
#include "nsm/escape.hpp"
#include "nsm/selfgrav.hpp"

using namespace nsm;

static void BM_SplitStep(benchmark::State& state) {
  const dynamics::GridSpec grid{static_cast<std::size_t>(state.range(0)), 32.0, 1e-3, 1};
  const double h = std::sqrt(0.5);
  auto psi = dynamics::init_gaussian(grid, 0.0, 1.0, {{h, 0.0}, {h, 0.0}});
  const dynamics::SplitStepPropagator prop(grid, {0.1, -0.1, 0.0});
  auto diag = dynamics::diagnose(psi, grid);
  for (auto _ : state) {
    diag = prop.advance(psi, diag);
    benchmark::DoNotOptimize(diag);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SplitStep)->RangeMultiplier(4)->Range(1024, 16384);

static void BM_ShapeFactor(benchmark::State& state) {
  double x = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(selfgrav::shape_factor(x));
    x = x < 1e3 ? x * 1.01 : 1e-3;
  }
}
BENCHMARK(BM_ShapeFactor);

static void BM_OverlapOracle(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(selfgrav::overlap_energy_oracle(1.5e-3, 1e4, 0.7e-3));
  }
}
BENCHMARK(BM_OverlapOracle)->Unit(benchmark::kMicrosecond);

static void BM_EscapeSampling(benchmark::State& state) {
  const auto samples = static_cast<std::uint64_t>(state.range(0));
  escape::SaddleModel m;
  m.force = 1e-2;
  const double e = escape::threshold_energy(m);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(escape::monte_carlo_escape(m, e, samples, 20.0, seed++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples));
}
BENCHMARK(BM_EscapeSampling)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_EscapeTrajectories(benchmark::State& state) {
  // Unpruned: every sample is integrated to escape or the horizon.
  escape::SaddleModel m;
  m.force = 1e-2;
  escape::EscapeOptions opt;
  opt.prune_trapped = false;
  const double e = escape::threshold_energy(m);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(escape::monte_carlo_escape(m, e, 200, 20.0, seed++, opt));
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_EscapeTrajectories)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
