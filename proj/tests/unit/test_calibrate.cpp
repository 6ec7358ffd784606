#include <gtest/gtest.h>

#include <random>

#include "p2m/calibrate.hpp"
#include "p2m/error.hpp"
#include "support.hpp"

namespace p2m::cost {
namespace {

FrontEndSpec anchor_spec() { return reference_spec(4, PoolSpec::avg(2)); }

CalibrationResult anchor_fit() {
  const FrontEndSpec spec = anchor_spec();
  return calibrate(Anchors{}, spec, default_backend(spec), default_hardware());
}

std::string calibration_message(const Anchors& a) {
  const FrontEndSpec spec = anchor_spec();
  try {
    calibrate(a, spec, default_backend(spec), default_hardware());
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::calibration);
    return e.what();
  }
  ADD_FAILURE() << "expected a calibration error";
  return {};
}

TEST(Calibrate, PublishedAnchorsWithinFivePercent) {
  const CalibrationResult r = anchor_fit();
  ASSERT_EQ(r.residuals.size(), kAnchorNames.size());
  for (const char* name : kAnchorNames) {
    ASSERT_TRUE(r.residuals.count(name)) << name;
    EXPECT_LT(r.residuals.at(name), 0.05) << name;
  }
  EXPECT_LT(r.max_residual(), 0.05);
}

TEST(Calibrate, RecomputedCostReproducesAnchors) {
  const CalibrationResult r = anchor_fit();
  const FrontEndSpec spec = anchor_spec();
  const CostReport report = evaluate_cost(spec, r.hardware, default_backend(spec), r.accounting);
  const auto predicted = predicted_anchors(report);
  const auto target = to_json(Anchors{});
  for (const char* name : kAnchorNames) {
    const double want = target.at(name).get<double>();
    EXPECT_LT(std::abs(predicted.at(name) - want) / want, 0.05) << name;
  }
}

TEST(Calibrate, PublishedBottlenecks) {
  const CalibrationResult r = anchor_fit();
  EXPECT_EQ(r.bottleneck_base, "adc");
  EXPECT_EQ(r.bottleneck_p2m, "sens");
}

TEST(Calibrate, DefaultDelaysAreTheFittedValues) {
  const CalibrationResult r = anchor_fit();
  const HardwarePair hw = default_hardware();
  EXPECT_DOUBLE_EQ(r.hardware.baseline.t_sens_per_row, hw.baseline.t_sens_per_row);
  EXPECT_DOUBLE_EQ(r.hardware.baseline.t_adc_cycle, hw.baseline.t_adc_cycle);
  EXPECT_DOUBLE_EQ(r.hardware.p2m.t_sens_per_row, hw.p2m.t_sens_per_row);
  EXPECT_DOUBLE_EQ(r.hardware.p2m.t_adc_cycle, hw.p2m.t_adc_cycle);
  EXPECT_EQ(r.hardware.baseline.t_back, 15.5);
  EXPECT_EQ(r.hardware.p2m.t_back, 13.5);
}

TEST(Calibrate, FittedEnergyTerms) {
  const CalibrationResult r = anchor_fit();
  const HardwarePair hw = default_hardware();
  EXPECT_EQ(r.accounting.sens.mode, PixelCountMode::fixed);
  const double es_b = (hw.baseline.e_pix + hw.baseline.e_adc) * 921600.0;
  EXPECT_NEAR(r.accounting.sens.fixed_count * (hw.p2m.e_pix + hw.p2m.e_adc) * 5.7, es_b, 1e-6 * es_b);
  EXPECT_EQ(r.hardware.baseline.e_mac, r.hardware.p2m.e_mac);
  EXPECT_GT(r.hardware.p2m.e_mac, 0.0);
}

TEST(Calibrate, SymmetricAnchorsGiveIdenticalPairs) {
  WorkloadCounts c;
  c.raw_pixels = c.transmitted = 50000;
  c.sensor_rows = 200;
  c.conversions = 50000;
  c.baseline_adc_conversions = c.p2m_adc_cycles = 50000;
  c.n_mac_baseline = c.n_mac_p2m = 1'000'000;
  HardwarePair seed = default_hardware();
  seed.p2m = seed.baseline;
  Anchors a;
  a.fps_base = a.fps_p2m = 20.0;
  a.t_back_base = a.t_back_p2m = 10.0;
  a.sens_latency_ratio = a.total_latency_ratio = 1.0;
  a.sens_energy_ratio = a.tot_energy_ratio = 1.0;
  const CalibrationResult r = calibrate(a, c, seed);
  EXPECT_EQ(r.hardware.baseline, r.hardware.p2m);
  EXPECT_EQ(r.bottleneck_base, r.bottleneck_p2m);
  EXPECT_LT(r.max_residual(), 1e-9);
}

TEST(Calibrate, NegativeSolutionsNameAnAnchor) {
  Anchors a;
  a.total_latency_ratio = 10.0;
  EXPECT_NE(calibration_message(a).find("_ratio"), std::string::npos);

  Anchors fast_backend;
  fast_backend.fps_base = 200.0;  // below t_back_base alone
  const std::string msg = calibration_message(fast_backend);
  EXPECT_FALSE(msg.empty());
}

TEST(Calibrate, NegativeEnergyNamesTotalRatio) {
  Anchors a;
  a.tot_energy_ratio = 50.0;
  EXPECT_NE(calibration_message(a).find("tot_energy_ratio"), std::string::npos);
}

TEST(Calibrate, AnchorValidation) {
  auto j = to_json(Anchors{});
  EXPECT_EQ(anchors_from_json(j).fps_p2m, 17.0);
  auto missing = j;
  missing.erase("fps_base");
  EXPECT_EQ(test::error_kind([&] { anchors_from_json(missing); }), ErrorKind::validation);
  auto extra = j;
  extra["bogus"] = 1;
  EXPECT_EQ(test::error_kind([&] { anchors_from_json(extra); }), ErrorKind::validation);
  auto negative = j;
  negative["sens_energy_ratio"] = -1.0;
  EXPECT_EQ(test::error_kind([&] { anchors_from_json(negative); }), ErrorKind::validation);
  auto text = j;
  text["fps_p2m"] = "17";
  EXPECT_EQ(test::error_kind([&] { anchors_from_json(text); }), ErrorKind::validation);
  EXPECT_EQ(test::error_kind([] { anchors_from_json(nlohmann::json::array()); }), ErrorKind::parse);
  EXPECT_EQ(test::error_kind([] { load_anchors("/nonexistent/anchors.json"); }), ErrorKind::not_found);
  EXPECT_EQ(load_anchors(test::data_path("anchors/published_anchors.json")).sens_energy_ratio, 5.7);
}

TEST(Calibrate, ParamsRoundTrip) {
  const CalibrationResult r = anchor_fit();
  const CalibratedParams p = params_from_json(to_json(r));
  EXPECT_EQ(p.hardware, r.hardware);
  EXPECT_EQ(p.accounting, r.accounting);
  EXPECT_EQ(test::error_kind([] { params_from_json(nlohmann::json::object()); }), ErrorKind::validation);
}

TEST(Calibrate, RandomConsistentAnchorsAreRecovered) {
  // Anchors generated by the forward model from known stage times must be
  // reproduced by the fit.
  std::mt19937_64 rng(701);
  const FrontEndSpec spec = anchor_spec();
  const BackendLayers backend = default_backend(spec);
  int fitted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    HardwarePair hw = default_hardware();
    hw.baseline.t_sens_per_row = test::uniform(rng, 1e4, 2e5);
    hw.baseline.t_adc_cycle = test::uniform(rng, 10, 200);
    hw.p2m.t_sens_per_row = test::uniform(rng, 1e4, 2e5);
    hw.p2m.t_adc_cycle = test::uniform(rng, 1e3, 2e4);
    const Accounting acc = parse_accounting("sens=fixed:" + std::to_string(test::uniform_int(rng, 100000, 900000)));
    const CostReport rep = evaluate_cost(spec, hw, backend, acc);
    const auto p = predicted_anchors(rep);
    Anchors a;
    a.fps_base = p.at("fps_base");
    a.fps_p2m = p.at("fps_p2m");
    a.t_back_base = p.at("t_back_base");
    a.t_back_p2m = p.at("t_back_p2m");
    a.sens_latency_ratio = p.at("sens_latency_ratio");
    a.total_latency_ratio = p.at("total_latency_ratio");
    a.sens_energy_ratio = p.at("sens_energy_ratio");
    a.tot_energy_ratio = p.at("tot_energy_ratio");
    const CalibrationResult r = calibrate(a, spec, backend, default_hardware());
    EXPECT_LT(r.max_residual(), 0.05);
    ++fitted;
  }
  EXPECT_EQ(fitted, 50);
}

}  // namespace
}  // namespace p2m::cost
