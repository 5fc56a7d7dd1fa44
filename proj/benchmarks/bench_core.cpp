// Microbenchmarks for the solver kernels and the assembled pipeline.
// Run directly: build/benchmarks/bench_core [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "hubnet/edgeout.hpp"
#include "hubnet/harness.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/penreg.hpp"
#include "hubnet/simgen.hpp"
#include "hubnet/types.hpp"

using namespace hubnet;

namespace {

simgen::SimData scenario_data(Index n, Index p, Index s) {
  simgen::ScenarioSpec spec;
  spec.kind = simgen::ScenarioKind::A;
  spec.n = n;
  spec.p = p;
  spec.s = s;
  spec.t_frac = 0.2;
  spec.seed = Seed{42};
  return simgen::gen_scenario(spec);
}

void BM_EdgeOutFit(benchmark::State& state) {
  const Index p = state.range(0);
  const auto data = scenario_data(100, p, 5);
  const Matrix xs = standardize(data.x_train).first;
  edgeout::Config cfg;
  cfg.gamma = 0.5;
  cfg.theta = 0.3 * edgeout::theta_max(xs, cfg.gamma);
  for (auto _ : state) {
    benchmark::DoNotOptimize(edgeout::fit(xs, cfg));
  }
}
BENCHMARK(BM_EdgeOutFit)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ThetaSelectGcv(benchmark::State& state) {
  const auto data = scenario_data(100, state.range(0), 5);
  const Matrix xs = standardize(data.x_train).first;
  for (auto _ : state) {
    benchmark::DoNotOptimize(edgeout::select_theta_gcv(xs, 0.5));
  }
}
BENCHMARK(BM_ThetaSelectGcv)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LassoPath(benchmark::State& state) {
  const Index p = state.range(0);
  const auto data = scenario_data(100, p, 5);
  const Matrix xs = standardize(data.x_train).first;
  const Vector w = Vector::Ones(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(penreg::lambda_path(
        xs, data.y_train, 1.0, w, penreg::Family::gaussian));
  }
}
BENCHMARK(BM_LassoPath)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_WeightedCv(benchmark::State& state) {
  const Index p = state.range(0);
  const auto data = scenario_data(100, p, 5);
  const Matrix xs = standardize(data.x_train).first;
  const Vector w = Vector::Ones(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(penreg::cv(xs, data.y_train, 1.0, w,
                                        penreg::Family::gaussian, 5, Seed{1}));
  }
}
BENCHMARK(BM_WeightedCv)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const auto data = scenario_data(100, state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(harness::run_hubnet(
        data.x_train, data.y_train, penreg::Family::gaussian, 5, Seed{1}));
  }
}
BENCHMARK(BM_Pipeline)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
