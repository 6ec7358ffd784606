#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/cost.hpp"
#include "p2m/layers.hpp"
#include "p2m/model.hpp"

namespace p2m::cost {

/// Published system-level figures the per-op constants are fitted to.
/// Ratios are baseline over P2M.
struct Anchors {
  double fps_base = 9.6;
  double fps_p2m = 17.0;
  double t_back_base = 15.5;
  double t_back_p2m = 13.5;
  double sens_latency_ratio = 1.7;
  double total_latency_ratio = 3.0;
  double sens_energy_ratio = 5.7;
  double tot_energy_ratio = 1.14;
};

inline constexpr std::array<const char*, 8> kAnchorNames = {
    "fps_base",           "fps_p2m",           "t_back_base",       "t_back_p2m",
    "sens_latency_ratio", "total_latency_ratio", "sens_energy_ratio", "tot_energy_ratio"};

Anchors anchors_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Anchors& anchors);
Anchors load_anchors(const std::string& path);

/// Value of each anchor as predicted by the model.
std::map<std::string, double> predicted_anchors(const CostReport& report);

struct CalibrationResult {
  HardwarePair hardware;
  Accounting accounting;
  Anchors anchors;
  FrontEndSpec spec;
  std::map<std::string, double> residuals;  ///< relative, per anchor
  std::string bottleneck_base;
  std::string bottleneck_p2m;

  double max_residual() const;
};

/// Fits t_sens_per_row and t_adc_cycle for both variants, the shared e_mac,
/// and a fixed P2M sensing count. Energy and communication constants come
/// from `seed`. Throws Error{calibration} naming the offending anchor when
/// no non-negative solution reproduces the anchors within 5%.
CalibrationResult calibrate(const Anchors& anchors, const WorkloadCounts& counts,
                            const HardwarePair& seed);
CalibrationResult calibrate(const Anchors& anchors, const FrontEndSpec& spec,
                            const BackendLayers& backend, const HardwarePair& seed);

nlohmann::json to_json(const CalibrationResult& result);

/// Hardware and accounting read back from a params file.
struct CalibratedParams {
  HardwarePair hardware;
  Accounting accounting;
};

CalibratedParams params_from_json(const nlohmann::json& j);
CalibratedParams load_params(const std::string& path);

}  // namespace p2m::cost
