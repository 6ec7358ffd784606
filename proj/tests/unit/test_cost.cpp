#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "p2m/config.hpp"
#include "p2m/cost.hpp"
#include "p2m/error.hpp"
#include "p2m/layers.hpp"
#include "p2m/schedule.hpp"
#include "support.hpp"

namespace p2m::cost {
namespace {

std::int64_t out_dim(std::int64_t in, int k, int s, int d) { return (in - k + 2 * d) / s + 1; }

// Per-layer spreadsheet arithmetic straight from the JSON document.
std::int64_t spreadsheet_macs(const nlohmann::json& layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) {
    const std::string kind = l.at("kind");
    if (kind == "fc") {
      total += l.at("in_channels").get<std::int64_t>() * l.at("out_channels").get<std::int64_t>();
    } else if (kind == "conv") {
      const int k = l.at("kernel"), s = l.at("stride"), d = l.at("padding");
      const std::int64_t h = out_dim(l.at("in_height"), k, s, d);
      const std::int64_t w = out_dim(l.at("in_width"), k, s, d);
      total += std::int64_t{k} * k * l.at("in_channels").get<int>() * l.at("out_channels").get<int>() * h * w;
    }
  }
  return total;
}

WorkloadCounts random_counts(std::mt19937_64& rng) {
  WorkloadCounts c;
  c.raw_pixels = test::uniform_int(rng, 0, 2'000'000);
  c.sensor_rows = test::uniform_int(rng, 0, 2000);
  c.conversions = test::uniform_int(rng, 0, 1'000'000);
  c.transmitted = test::uniform_int(rng, 0, 1'000'000);
  c.p2m_adc_cycles = test::uniform_int(rng, 0, 5000);
  c.baseline_adc_conversions = c.raw_pixels;
  c.n_mac_baseline = test::uniform_int(rng, 0, 1'000'000'000);
  c.n_mac_p2m = test::uniform_int(rng, 0, 1'000'000'000);
  return c;
}

HardwareParams random_params(std::mt19937_64& rng) {
  HardwareParams p;
  p.e_pix = test::uniform(rng, 0, 500);
  p.e_adc = test::uniform(rng, 0, 200);
  p.e_com = test::uniform(rng, 0, 1000);
  p.e_mac = test::uniform(rng, 0, 5);
  p.t_sens_per_row = test::uniform(rng, 0, 1e5);
  p.t_adc_cycle = test::uniform(rng, 0, 1e4);
  p.t_com_per_value = test::uniform(rng, 0, 20);
  p.t_back = test::uniform(rng, 0, 30);
  return p;
}

void expect_delay_identities(const DelayBreakdown& d) {
  EXPECT_EQ(d.t_total, d.t_sens + d.t_adc + d.t_com + d.t_back);
  const double slowest = std::max({d.t_sens, d.t_adc, d.t_com, d.t_back});
  if (slowest > 0) EXPECT_EQ(d.fps_pipelined, 1000.0 / slowest);
  else EXPECT_TRUE(std::isinf(d.fps_pipelined));
}

TEST(Cost, TransistorCounts) {
  EXPECT_EQ(transistor_count({7, 2, 3, 16, 32}), 256);
  EXPECT_EQ(transistor_count({7, 4, 3, 16, 32}), 64);
  EXPECT_EQ(transistor_count({7, 6, 3, 16, 32}), 64);
  EXPECT_EQ(transistor_count({5, 5, 0, 1, 32}), 1);
}

TEST(Cost, BandwidthReduction) {
  EXPECT_DOUBLE_EQ(bandwidth_reduction(reference_spec(2, PoolSpec::max(2))), 6.0);
  EXPECT_DOUBLE_EQ(bandwidth_reduction(reference_spec(4, PoolSpec::avg(2))), 24.0);
  const FrontEndSpec s6 = reference_spec(6, PoolSpec::none());
  EXPECT_EQ(s6.transmitted_values(), 102720);
  EXPECT_DOUBLE_EQ(bandwidth_reduction(s6), 691200.0 / 102720.0 * 2.0);
  EXPECT_NEAR(bandwidth_reduction(s6), 13.5, 0.05);
}

TEST(Cost, MacCountExamples) {
  LayerSpec one;
  one.in_channels = one.out_channels = 1;
  EXPECT_EQ(mac_count(std::vector<LayerSpec>{one}), 1);
  LayerSpec c3;
  c3.in_channels = 2;
  c3.out_channels = 4;
  c3.kernel = 3;
  c3.padding = 1;
  c3.in_height = c3.in_width = 8;
  EXPECT_EQ(mac_count(std::vector<LayerSpec>{c3}), 4608);
}

TEST(Cost, ToyBackboneMatchesSpreadsheet) {
  const std::string path = test::data_path("backend/toy_backbone.json");
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  const BackendLayers b = load_backend(path);
  EXPECT_EQ(mac_count(b.baseline), spreadsheet_macs(doc.at("baseline")));
  EXPECT_EQ(mac_count(b.p2m), spreadsheet_macs(doc.at("p2m")));
}

TEST(Cost, MacChainBreakIsShapeError) {
  LayerSpec a;
  a.in_channels = 3;
  a.out_channels = 8;
  a.in_height = a.in_width = 4;
  LayerSpec b = a;
  b.in_channels = 4;
  EXPECT_EQ(test::error_kind([&] { mac_count(std::vector<LayerSpec>{a, b}); }), ErrorKind::shape);
}

TEST(Cost, PerOpSensorEnergyRatio) {
  const HardwarePair hw = default_hardware();
  const double r = (hw.baseline.e_pix + hw.baseline.e_adc) / (hw.p2m.e_pix + hw.p2m.e_adc);
  EXPECT_NEAR(r, 2.096, 0.001);
  WorkloadCounts c;
  c.raw_pixels = c.conversions = 1000;
  const EnergyPair e = energy(c, hw, parse_accounting("sens=raw_pixels"));
  EXPECT_NEAR(e.baseline.e_sens / e.p2m.e_sens, 2.096, 0.001);
}

TEST(Cost, BackendSpeedup) {
  const HardwarePair hw = default_hardware();
  EXPECT_NEAR(hw.baseline.t_back / hw.p2m.t_back, 1.148, 0.001);
}

TEST(Cost, CommEnergyRatioAtStrideFour) {
  const FrontEndSpec spec = reference_spec(4, PoolSpec::avg(2));
  const CostReport r = evaluate_cost(spec, default_hardware(), default_backend(spec));
  EXPECT_EQ(r.counts.transmitted, 57600);
  EXPECT_EQ(r.counts.raw_pixels, 921600);
  EXPECT_DOUBLE_EQ(r.p2m.energy.e_com / r.baseline.energy.e_com, 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(*r.ratios.e_com, 16.0);
  EXPECT_EQ(r.counts.conversions, 230400);
  EXPECT_EQ(r.counts.p2m_adc_cycles, 26 * 16);
}

TEST(Cost, AdditivityOnRandomInputs) {
  std::mt19937_64 rng(601);
  const char* modes[] = {"conversions", "raw_pixels", "transmitted", "fixed:12345"};
  for (int trial = 0; trial < 500; ++trial) {
    const WorkloadCounts c = random_counts(rng);
    const HardwarePair hw{random_params(rng), random_params(rng)};
    const Accounting acc = parse_accounting(std::string("sens=") + modes[trial % 4] + ",com=" + modes[(trial / 4) % 4]);
    const EnergyPair e = energy(c, hw, acc);
    for (const auto* b : {&e.p2m, &e.baseline}) EXPECT_EQ(b->e_tot, b->e_sens + b->e_com + b->e_mac);
    const DelayPair d = delay(c, hw);
    expect_delay_identities(d.p2m);
    expect_delay_identities(d.baseline);
  }
}

TEST(Cost, ReportsOnRandomSpecsAreConsistent) {
  std::mt19937_64 rng(602);
  for (int trial = 0; trial < 100; ++trial) {
    const FrontEndSpec spec = test::random_small_spec(rng);
    const Extent2D grid = spec.conv_input();
    if (spec.conv.kernel > grid.height || spec.conv.kernel > grid.width) continue;
    const CostReport r = evaluate_cost(spec, default_hardware(), BackendLayers{});
    EXPECT_EQ(r.p2m.energy.e_tot, r.p2m.energy.e_sens + r.p2m.energy.e_com + r.p2m.energy.e_mac);
    expect_delay_identities(r.p2m.delay);
    EXPECT_EQ(r.p2m.conversions, schedule::total_conversions(spec).conversions);
    EXPECT_EQ(r.counts.transmitted, spec.transmitted_values());
    EXPECT_DOUBLE_EQ(r.p2m.energy.n_pix_sens, static_cast<double>(r.counts.conversions));
    EXPECT_DOUBLE_EQ(r.p2m.energy.n_pix_com, static_cast<double>(r.counts.transmitted));
  }
}

TEST(Cost, AllZeroDelaysLeaveBackend) {
  WorkloadCounts c;
  c.raw_pixels = c.sensor_rows = c.transmitted = 100;
  HardwarePair hw;
  hw.baseline.t_back = 15.5;
  const DelayPair d = delay(c, hw);
  EXPECT_EQ(d.baseline.t_total, 15.5);
  EXPECT_TRUE(std::isinf(d.p2m.fps_pipelined));
}

TEST(Cost, ZeroSizedWorkloadHasZeroEnergy) {
  const EnergyPair e = energy(WorkloadCounts{}, default_hardware());
  for (const auto* b : {&e.p2m, &e.baseline}) {
    EXPECT_EQ(b->e_sens, 0.0);
    EXPECT_EQ(b->e_com, 0.0);
    EXPECT_EQ(b->e_mac, 0.0);
    EXPECT_EQ(b->e_tot, 0.0);
  }
}

TEST(Cost, MonotoneInStride) {
  std::mt19937_64 rng(603);
  for (int trial = 0; trial < 200; ++trial) {
    FrontEndSpec spec;
    spec.geometry = {2 * test::uniform_int(rng, 16, 400), 2 * test::uniform_int(rng, 16, 400), 12};
    spec.conv.kernel = test::uniform_int(rng, 1, 9);
    spec.conv.padding = test::uniform_int(rng, 0, spec.conv.kernel - 1);
    spec.conv.out_channels = test::uniform_int(rng, 1, 32);
    switch (trial % 3) {
      case 0: spec.pool = PoolSpec::none(); break;
      case 1: spec.pool = PoolSpec::max(2); break;
      default: spec.pool = PoolSpec::avg(2); break;
    }
    std::optional<CostVector> prev;
    for (int s = 1; s <= 8; ++s) {
      spec.conv.stride = s;
      if (!validate_spec(spec).empty()) break;
      const CostReport r = evaluate_cost(spec, default_hardware(), BackendLayers{});
      if (prev) {
        EXPECT_GE(r.p2m.br, prev->br);
        EXPECT_LE(r.p2m.n_t, prev->n_t);
        EXPECT_LE(r.p2m.conversions, prev->conversions);
        EXPECT_LE(r.p2m.cycles, prev->cycles);
      }
      prev = r.p2m;
    }
  }
}

TEST(Cost, BandwidthReductionScaleInvariant) {
  for (const FrontEndSpec& base : published_specs()) {
    FrontEndSpec big = base;
    big.geometry.width *= 2;
    big.geometry.height *= 2;
    EXPECT_LT(std::abs(bandwidth_reduction(big) / bandwidth_reduction(base) - 1.0), 0.01);
  }
  std::mt19937_64 rng(604);
  for (int trial = 0; trial < 200; ++trial) {
    FrontEndSpec spec;
    spec.geometry = {2 * test::uniform_int(rng, 320, 1000), 2 * test::uniform_int(rng, 240, 800), 12};
    spec.conv.kernel = test::uniform_int(rng, 3, 7);
    spec.conv.stride = test::uniform_int(rng, 1, 6);
    spec.conv.padding = spec.conv.kernel / 2;
    spec.pool = trial % 2 ? PoolSpec::max(2) : PoolSpec::none();
    FrontEndSpec big = spec;
    big.geometry.width *= 2;
    big.geometry.height *= 2;
    // Each window stage can round an axis by a cell, so the allowance shrinks
    // with the transmitted extent.
    const Extent2D out = spec.transmitted_extent();
    const double allowance = 2.0 / static_cast<double>(out.height) + 2.0 / static_cast<double>(out.width);
    EXPECT_LT(std::abs(bandwidth_reduction(big) / bandwidth_reduction(spec) - 1.0), allowance);
  }
}

TEST(Cost, AccountingParse) {
  EXPECT_EQ(parse_accounting("conversions"), Accounting{});
  const Accounting a = parse_accounting("sens=fixed:338985,com=raw_pixels");
  EXPECT_EQ(a.sens.mode, PixelCountMode::fixed);
  EXPECT_EQ(a.sens.fixed_count, 338985.0);
  EXPECT_EQ(a.com.mode, PixelCountMode::raw_pixels);
  EXPECT_EQ(accounting_from_json(to_json(a)), a);
  EXPECT_EQ(a.describe(), "sens=fixed:338985,com=raw_pixels");
  for (const char* bad : {"bogus", "sens=", "foo=conversions", "sens=fixed:-1", "sens=fixed:x", "sens"})
    EXPECT_EQ(test::error_kind([&] { parse_accounting(bad); }), ErrorKind::validation) << bad;
}

std::ptrdiff_t unquoted_commas(const std::string& line) {
  std::ptrdiff_t n = 0;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) ++n;
  }
  return n;
}

TEST(Cost, ReportJsonAndCsv) {
  const FrontEndSpec spec = reference_spec(2, PoolSpec::max(2));
  HardwarePair hw = default_hardware();
  hw.p2m.e_mac = 0.0;
  const CostReport r = evaluate_cost(spec, hw, BackendLayers{});
  const auto j = to_json(r);
  for (const char* key : {"spec", "cost_vector", "errata_notes", "accounting_mode"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["cost_vector"]["p2m"]["n_t"], 256);
  EXPECT_TRUE(j["cost_vector"]["ratios"]["e_mac"].is_null());
  EXPECT_EQ(j["accounting_mode"], "sens=conversions,com=transmitted");

  const std::string header = csv_header();
  const std::string row = csv_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), unquoted_commas(row));
  EXPECT_NE(row.find("\"sens=conversions,com=transmitted\""), std::string::npos);
  EXPECT_NE(header.find("_pJ"), std::string::npos);
  EXPECT_NE(header.find("_ms"), std::string::npos);

  HardwarePair zero;
  const CostReport z = evaluate_cost(spec, zero, BackendLayers{});
  EXPECT_NE(csv_row(z).find("\xE2\x80\x94"), std::string::npos);
  EXPECT_NE(csv_row(z).find("inf"), std::string::npos);
  EXPECT_TRUE(to_json(z)["cost_vector"]["p2m"]["fps"].is_null());
}

TEST(Cost, EmptyTransmittedMapIsShapeError) {
  FrontEndSpec spec;
  spec.geometry = {4, 4, 12};
  spec.conv = {1, 1, 0, 1, 32};
  spec.pool = PoolSpec::max(1, 3, 0);
  EXPECT_EQ(test::error_kind([&] { bandwidth_reduction(spec); }), ErrorKind::shape);
}

}  // namespace
}  // namespace p2m::cost
