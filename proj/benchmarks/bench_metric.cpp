// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "lsmt/metric.hpp"

namespace {

using namespace lsmt;

ParamVector bench_theta() {
    KroneckerStructure st(2, {2, 1});
    return sample_stable(st, 7, 0.85);
}

void BM_MetricStein(benchmark::State& state) {
    const StateSpaceModel model = build_state_space(bench_theta());
    for (auto _ : state) benchmark::DoNotOptimize(metric_stein(model));
}
BENCHMARK(BM_MetricStein);

void BM_MetricSeries(benchmark::State& state) {
    const StateSpaceModel model = build_state_space(bench_theta());
    for (auto _ : state) benchmark::DoNotOptimize(metric_series(model, 1e-10));
}
BENCHMARK(BM_MetricSeries);

void BM_MetricQuadrature(benchmark::State& state) {
    const StateSpaceModel model = build_state_space(bench_theta());
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(metric_quadrature(model, N));
}
BENCHMARK(BM_MetricQuadrature)->Arg(256)->Arg(1024)->Arg(4096);

void BM_MetricArma(benchmark::State& state) {
    const ParamVector theta = bench_theta();
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(metric_arma(theta, N));
}
BENCHMARK(BM_MetricArma)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
