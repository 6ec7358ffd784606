#include <benchmark/benchmark.h>

#include "p2m/dse.hpp"

namespace {

using namespace p2m;

void BM_WideSweep(benchmark::State& state) {
  const auto sweep = dse::load_sweep(std::string(P2M_DATA_DIR) + "/sweeps/wide_sweep.json");
  const auto accuracy = dse::bundled_accuracy();
  const HardwarePair hw = default_hardware();
  std::size_t points = 0;
  for (auto _ : state) {
    auto r = dse::run_sweep(sweep, hw, cost::Accounting{}, accuracy);
    points = r.points.size();
    benchmark::DoNotOptimize(r.front);
  }
  state.counters["points"] = static_cast<double>(points);
}
BENCHMARK(BM_WideSweep)->Unit(benchmark::kMillisecond);

void BM_Enumerate(benchmark::State& state) {
  const auto sweep = dse::load_sweep(std::string(P2M_DATA_DIR) + "/sweeps/wide_sweep.json");
  for (auto _ : state) benchmark::DoNotOptimize(dse::enumerate(sweep.spaces));
}
BENCHMARK(BM_Enumerate);

}  // namespace
