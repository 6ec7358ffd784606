#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "p2m/config.hpp"
#include "p2m/error.hpp"
#include "p2m/schedule.hpp"
#include "support.hpp"

namespace p2m::schedule {
namespace {

bool has_kind(const std::vector<Violation>& v, Violation::Kind kind) {
  for (const auto& x : v)
    if (x.kind == kind) return true;
  return false;
}

// Independent check: footprints clipped to the array never overlap within a
// cycle, no two kernels in the same K-wide column group share an ADC, and
// every output position appears exactly once.
void expect_valid_by_brute_force(const ScheduleTrace& t) {
  const FrontEndSpec& s = t.spec;
  const Extent2D grid = s.conv_input();
  const Extent2D out = s.conv_output();
  const int k = s.conv.kernel;
  std::map<std::pair<std::int64_t, std::int64_t>, int> seen;
  for (std::size_t ci = 0; ci < t.cycles.size(); ++ci) {
    std::set<std::pair<std::int64_t, std::int64_t>> pixels;
    std::set<std::pair<std::int64_t, int>> adcs;
    for (const Activation& a : t.cycles[ci]) {
      ++seen[{a.kernel_row, a.kernel_col}];
      const std::int64_t top = a.kernel_row * s.conv.stride - s.conv.padding;
      const std::int64_t left = a.kernel_col * s.conv.stride - s.conv.padding;
      for (std::int64_t y = top; y < top + k; ++y)
        for (std::int64_t x = left; x < left + k; ++x)
          if (y >= 0 && x >= 0 && y < grid.height && x < grid.width)
            ASSERT_TRUE(pixels.insert({y, x}).second) << "overlap in cycle " << ci;
      ASSERT_GE(a.adc, 0);
      ASSERT_LT(a.adc, k);
      ASSERT_TRUE(adcs.insert({(left + s.conv.padding) / k, a.adc}).second) << "adc clash in cycle " << ci;
    }
  }
  ASSERT_EQ(static_cast<std::int64_t>(seen.size()), out.area());
  for (const auto& [p, n] : seen) ASSERT_EQ(n, 1);
}

TEST(Schedule, PublishedCycleCounts) {
  struct Case {
    int stride;
    PoolSpec pool;
    std::int64_t cycles;
  };
  for (const Case& c : {Case{2, PoolSpec::max(2), 104}, Case{4, PoolSpec::avg(2), 26},
                        Case{6, PoolSpec::none(), 18}}) {
    const FrontEndSpec spec = reference_spec(c.stride, c.pool);
    EXPECT_EQ(plan_schedule(spec).cycles(), c.cycles);
    EXPECT_EQ(closed_form_cycles(spec), c.cycles);
    const ScheduleTrace t = build_schedule(spec, 0);
    EXPECT_EQ(static_cast<std::int64_t>(t.cycles.size()), c.cycles);
    EXPECT_TRUE(validate_schedule(t).empty());
    EXPECT_EQ(summarize(t).delta(), 0);
  }
}

TEST(Schedule, ConversionBudget) {
  const ConversionBudget b = total_conversions(reference_spec(4, PoolSpec::avg(2)));
  EXPECT_EQ(b.cycles_per_channel, 26);
  EXPECT_EQ(b.total_cycles, 26 * 16);
  EXPECT_EQ(b.conversions, 16 * 90 * 160);
  EXPECT_EQ(total_conversions(reference_spec(2, PoolSpec::max(2))).conversions, 16 * 180 * 320);
}

TEST(Schedule, ToyConfigSixCycles) {
  const FrontEndSpec spec = load_config(test::data_path("configs/toy_5x5_k2.json")).spec;
  EXPECT_EQ(spec.conv_output(), (Extent2D{6, 6}));
  const ScheduleTrace t = build_schedule(spec, 0);
  EXPECT_EQ(t.cycles.size(), 6u);
  EXPECT_EQ(t.activation_count(), 36);
  expect_valid_by_brute_force(t);
}

TEST(Schedule, StrideEqualsKernelIsOneWavePerStack) {
  const FrontEndSpec spec = load_config(test::data_path("configs/probe_k4_s4.json")).spec;
  const SchedulePlan plan = plan_schedule(spec);
  EXPECT_EQ(plan.phases, 1);
  EXPECT_EQ(plan.waves, 23);  // ceil(90 / 4)
  const ScheduleTrace t = build_schedule(spec, 3);
  EXPECT_TRUE(validate_schedule(t).empty());
  EXPECT_EQ(t.max_parallel(), 4 * 160);  // waves 0..20 hold four rows each
}

TEST(Schedule, RandomSpecsAreValid) {
  std::mt19937_64 rng(501);
  int built = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const FrontEndSpec spec = test::random_small_spec(rng);
    const Extent2D grid = spec.conv_input();
    if (spec.conv.kernel > grid.height || spec.conv.kernel > grid.width) {
      EXPECT_EQ(test::error_kind([&] { plan_schedule(spec); }), ErrorKind::infeasible);
      continue;
    }
    const ScheduleTrace t = build_schedule(spec, test::uniform_int(rng, 0, spec.conv.out_channels - 1));
    EXPECT_EQ(static_cast<std::int64_t>(t.cycles.size()), plan_schedule(spec).cycles());
    EXPECT_TRUE(validate_schedule(t).empty());
    expect_valid_by_brute_force(t);
    ++built;
  }
  EXPECT_GT(built, 100);
}

TEST(Schedule, DetectsCorruption) {
  const FrontEndSpec spec = load_config(test::data_path("configs/toy_5x5_k2.json")).spec;
  const ScheduleTrace good = build_schedule(spec, 0);

  ScheduleTrace dropped = good;
  dropped.cycles[0].pop_back();
  EXPECT_TRUE(has_kind(validate_schedule(dropped), Violation::Kind::coverage));

  ScheduleTrace duplicated = good;
  duplicated.cycles[1].push_back(good.cycles[0].front());
  const auto v = validate_schedule(duplicated);
  EXPECT_TRUE(has_kind(v, Violation::Kind::coverage));
  EXPECT_TRUE(has_kind(v, Violation::Kind::disjointness) || has_kind(v, Violation::Kind::adc_conflict));

  // Adjacent rows overlap for K=2, S=1.
  ScheduleTrace merged = good;
  for (const auto& a : good.cycles[1]) merged.cycles[0].push_back(a);
  merged.cycles[1].clear();
  EXPECT_TRUE(has_kind(validate_schedule(merged), Violation::Kind::disjointness));

  ScheduleTrace clash = good;
  for (auto& a : clash.cycles[0]) a.adc = 0;
  EXPECT_TRUE(has_kind(validate_schedule(clash), Violation::Kind::adc_conflict));

  ScheduleTrace bad_adc = good;
  bad_adc.cycles[0][0].adc = 5;
  EXPECT_TRUE(has_kind(validate_schedule(bad_adc), Violation::Kind::geometry));

  ScheduleTrace outside = good;
  outside.cycles[0].push_back(make_activation(spec, 6, 0, 0));
  EXPECT_TRUE(has_kind(validate_schedule(outside), Violation::Kind::coverage));
}

TEST(Schedule, JsonlRoundTrip) {
  const FrontEndSpec spec = reference_spec(6, PoolSpec::none());
  const ScheduleTrace t = build_schedule(spec, 2);
  const ScheduleTrace back = from_jsonl(to_jsonl(t), spec, 2);
  EXPECT_EQ(back.cycles, t.cycles);
  const std::string capped = to_jsonl(t, 4);
  EXPECT_EQ(std::count(capped.begin(), capped.end(), '\n'), 4);
  EXPECT_EQ(from_jsonl(capped, spec, 2).cycles.size(), 4u);
}

TEST(Schedule, SummaryJson) {
  const ScheduleTrace t = build_schedule(reference_spec(2, PoolSpec::max(2)), 0);
  const auto j = to_json(summarize(t));
  EXPECT_EQ(j.at("cycles"), 104);
  EXPECT_EQ(j.at("closed_form_cycles"), 104);
  EXPECT_EQ(j.at("conversions"), 16 * 180 * 320);
}

TEST(Schedule, Errors) {
  const FrontEndSpec spec = reference_spec(2, PoolSpec::max(2));
  EXPECT_EQ(test::error_kind([&] { build_schedule(spec, 16); }), ErrorKind::validation);
  EXPECT_EQ(test::error_kind([&] { build_schedule(spec, -1); }), ErrorKind::validation);
  FrontEndSpec tiny = spec;
  tiny.geometry = {4, 4, 12};
  tiny.conv.kernel = 3;
  tiny.conv.padding = 1;
  tiny.pool = PoolSpec::none();
  EXPECT_EQ(test::error_kind([&] { plan_schedule(tiny); }), ErrorKind::infeasible);
  EXPECT_EQ(test::error_kind([&] { from_jsonl("{not json\n", spec, 0); }), ErrorKind::parse);
}

}  // namespace
}  // namespace p2m::schedule
