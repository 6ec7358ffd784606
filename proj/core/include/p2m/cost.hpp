#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/layers.hpp"
#include "p2m/model.hpp"

namespace p2m::cost {

/// Maximum weight transistors per pixel: ceil(K/S)^2 * C_o.
std::int64_t transistor_count(const ConvSpec& conv);

/// BR = (I / O) * (4/3) * (pixel_bit_depth / N_b), I = 3 * demosaiced pixels,
/// O = transmitted map elements (conv then pool). Throws Error{shape} if O = 0.
double bandwidth_reduction(const FrontEndSpec& spec);

/// Which per-frame count feeds an N_pix term of the P2M energy.
enum class PixelCountMode { conversions, raw_pixels, transmitted, fixed };

std::string_view to_string(PixelCountMode mode);

struct TermAccounting {
  PixelCountMode mode = PixelCountMode::conversions;
  double fixed_count = 0.0;
  friend bool operator==(const TermAccounting&, const TermAccounting&) = default;
};

/// Baseline terms always count raw sensor pixels.
struct Accounting {
  TermAccounting sens{PixelCountMode::conversions};
  TermAccounting com{PixelCountMode::transmitted};

  std::string describe() const;
  friend bool operator==(const Accounting&, const Accounting&) = default;
};

/// Accepts "conversions" (sensing term only) or a comma list such as
/// "sens=raw_pixels,com=transmitted" or "sens=fixed:338985".
Accounting parse_accounting(std::string_view text);
nlohmann::json to_json(const Accounting& accounting);
Accounting accounting_from_json(const nlohmann::json& j);

/// Per-frame operation counts for both variants.
struct WorkloadCounts {
  std::int64_t raw_pixels = 0;
  std::int64_t sensor_rows = 0;
  std::int64_t conversions = 0;     ///< P2M ADC conversions (pre-pool activations)
  std::int64_t transmitted = 0;     ///< O
  std::int64_t p2m_adc_cycles = 0;  ///< C_o * cycles per channel
  std::int64_t baseline_adc_conversions = 0;
  std::int64_t n_mac_baseline = 0;
  std::int64_t n_mac_p2m = 0;
};

WorkloadCounts workload_counts(const FrontEndSpec& spec, const BackendLayers& backend);

struct EnergyBreakdown {
  double e_sens = 0.0;
  double e_com = 0.0;
  double e_mac = 0.0;
  double e_tot = 0.0;
  double n_pix_sens = 0.0;
  double n_pix_com = 0.0;
  double n_mac = 0.0;
};

struct EnergyPair {
  EnergyBreakdown p2m;
  EnergyBreakdown baseline;
};

EnergyPair energy(const WorkloadCounts& counts, const HardwarePair& hw,
                  const Accounting& accounting = {});

/// Stage delays in ms; fps_pipelined = 1 / slowest stage (0 stages give +inf).
struct DelayBreakdown {
  double t_sens = 0.0;
  double t_adc = 0.0;
  double t_com = 0.0;
  double t_back = 0.0;
  double t_total = 0.0;
  double fps_pipelined = 0.0;
};

struct DelayPair {
  DelayBreakdown p2m;
  DelayBreakdown baseline;
};

DelayPair delay(const WorkloadCounts& counts, const HardwarePair& hw);

struct CostVector {
  std::int64_t n_t = 0;
  double br = 1.0;
  std::int64_t conversions = 0;
  std::int64_t cycles = 0;
  EnergyBreakdown energy;
  DelayBreakdown delay;
  double fps = 0.0;
};

/// Baseline-over-P2M ratios; nullopt where the denominator is zero.
struct CostRatios {
  std::optional<double> e_sens, e_com, e_mac, e_tot;
  std::optional<double> t_sens, t_total, fps;
};

struct CostReport {
  FrontEndSpec spec;
  CostVector p2m;
  CostVector baseline;
  CostRatios ratios;
  Accounting accounting;
  WorkloadCounts counts;
};

CostReport evaluate_cost(const FrontEndSpec& spec, const HardwarePair& hw,
                         const BackendLayers& backend, const Accounting& accounting = {});

/// Notes printed with every report on how the bandwidth formula is applied.
std::vector<std::string> errata_notes();

nlohmann::json to_json(const EnergyBreakdown& e);
nlohmann::json to_json(const DelayBreakdown& d);
nlohmann::json to_json(const CostVector& c);
nlohmann::json to_json(const CostReport& report);
std::string csv_header();
std::string csv_row(const CostReport& report);

}  // namespace p2m::cost
