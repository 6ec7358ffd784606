#include <benchmark/benchmark.h>

#include "p2m/calibrate.hpp"
#include "p2m/cost.hpp"
#include "p2m/layers.hpp"

namespace {

using namespace p2m;
using cost::BackendLayers;
using cost::default_backend;

void BM_EvaluateCost(benchmark::State& state) {
  const FrontEndSpec spec = reference_spec(4, PoolSpec::avg(2));
  const BackendLayers backend = default_backend(spec);
  const HardwarePair hw = default_hardware();
  for (auto _ : state) benchmark::DoNotOptimize(cost::evaluate_cost(spec, hw, backend));
}
BENCHMARK(BM_EvaluateCost);

void BM_DefaultBackend(benchmark::State& state) {
  const FrontEndSpec spec = reference_spec(2, PoolSpec::max(2));
  for (auto _ : state) benchmark::DoNotOptimize(default_backend(spec));
}
BENCHMARK(BM_DefaultBackend);

void BM_Calibrate(benchmark::State& state) {
  const FrontEndSpec spec = reference_spec(4, PoolSpec::avg(2));
  const BackendLayers backend = default_backend(spec);
  const HardwarePair hw = default_hardware();
  for (auto _ : state) benchmark::DoNotOptimize(cost::calibrate(cost::Anchors{}, spec, backend, hw));
}
BENCHMARK(BM_Calibrate);

}  // namespace
