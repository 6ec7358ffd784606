#include <benchmark/benchmark.h>

#include "p2m/model.hpp"
#include "p2m/schedule.hpp"

namespace {

using namespace p2m;

FrontEndSpec spec_for(int stride) {
  return reference_spec(stride, stride == 6 ? PoolSpec::none() : PoolSpec::max(2));
}

void BM_BuildSchedule(benchmark::State& state) {
  const FrontEndSpec spec = spec_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(schedule::build_schedule(spec, 0));
}
BENCHMARK(BM_BuildSchedule)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ValidateSchedule(benchmark::State& state) {
  const auto trace = schedule::build_schedule(spec_for(static_cast<int>(state.range(0))), 0);
  for (auto _ : state) benchmark::DoNotOptimize(schedule::validate_schedule(trace));
}
BENCHMARK(BM_ValidateSchedule)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_TraceJsonl(benchmark::State& state) {
  const auto trace = schedule::build_schedule(spec_for(2), 0);
  for (auto _ : state) benchmark::DoNotOptimize(schedule::to_jsonl(trace));
}
BENCHMARK(BM_TraceJsonl)->Unit(benchmark::kMillisecond);

}  // namespace
