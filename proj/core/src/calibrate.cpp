#include "p2m/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "p2m/config.hpp"
#include "p2m/error.hpp"

namespace p2m::cost {
namespace {

constexpr double kNsToMs = 1e-6;
constexpr double kTolerance = 0.05;

enum Stage { sens = 0, adc = 1, com = 2, back = 3 };
constexpr std::array<const char*, 4> kStageNames = {"sens", "adc", "com", "back"};

// Unknowns are stage times in ms: [sens_b, adc_b, sens_p, adc_p].
struct Candidate {
  Stage base;
  Stage p2m;
  Eigen::Vector4d y;
  double error = 0.0;
};

struct Fixed {
  double com_b, back_b, com_p, back_p;
};

double fixed_stage(Stage s, double com_ms, double back_ms) {
  return s == com ? com_ms : s == back ? back_ms : 0.0;
}

double rel(double model, double target) {
  return std::abs(model - target) / std::abs(target);
}

// Worst relative error of the latency anchors under the max-stage model.
double delay_error(const Eigen::Vector4d& y, const Fixed& f, const Anchors& a) {
  const double slow_b = std::max({y[0], y[1], f.com_b, f.back_b});
  const double slow_p = std::max({y[2], y[3], f.com_p, f.back_p});
  if (slow_b <= 0.0 || slow_p <= 0.0) return std::numeric_limits<double>::infinity();
  const double tot_b = y[0] + y[1] + f.com_b + f.back_b;
  const double tot_p = y[2] + y[3] + f.com_p + f.back_p;
  double err = std::max(rel(1000.0 / slow_b, a.fps_base), rel(1000.0 / slow_p, a.fps_p2m));
  err = std::max(err, tot_p > 0.0 ? rel(tot_b / tot_p, a.total_latency_ratio)
                                  : std::numeric_limits<double>::infinity());
  if (y[2] != 0.0) err = std::max(err, rel(y[0] / y[2], a.sens_latency_ratio));
  else if (y[0] != 0.0) err = std::numeric_limits<double>::infinity();
  return err;
}

Candidate solve(Stage sb, Stage sp, const Fixed& f, const Anchors& a) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  const double target_b = 1000.0 / a.fps_base;
  const double target_p = 1000.0 / a.fps_p2m;
  if (sb <= adc) m(0, sb) = 1.0;
  rhs[0] = target_b - fixed_stage(sb, f.com_b, f.back_b);
  if (sp <= adc) m(1, 2 + sp) = 1.0;
  rhs[1] = target_p - fixed_stage(sp, f.com_p, f.back_p);
  m(2, 0) = 1.0;
  m(2, 2) = -a.sens_latency_ratio;
  m(3, 0) = 1.0;
  m(3, 1) = 1.0;
  m(3, 2) = -a.total_latency_ratio;
  m(3, 3) = -a.total_latency_ratio;
  rhs[3] = a.total_latency_ratio * (f.com_p + f.back_p) - (f.com_b + f.back_b);

  Candidate c{sb, sp, m.completeOrthogonalDecomposition().solve(rhs)};
  c.error = delay_error(c.y, f, a);
  return c;
}

bool non_negative(const Eigen::Vector4d& y) {
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  return (y.array() >= -1e-12 * scale).all();
}

std::string negative_anchor(const Candidate& c) {
  for (int k = 0; k < 4; ++k) {
    if (c.y[k] >= 0.0) continue;
    const bool is_base = k < 2;
    const Stage stage = static_cast<Stage>(k % 2);
    const Stage bottleneck = is_base ? c.base : c.p2m;
    const Stage other = is_base ? c.p2m : c.base;
    const std::string unknown = std::string(stage == sens ? "t_sens_per_row" : "t_adc_cycle") +
                                (is_base ? " (baseline)" : " (p2m)");
    std::string anchor;
    if (stage == bottleneck) anchor = is_base ? "fps_base" : "fps_p2m";
    else if (stage == sens && other == sens) anchor = "sens_latency_ratio";
    else anchor = "total_latency_ratio";
    return anchor + " implies negative " + unknown;
  }
  return "no negative unknown";
}

// First stage attaining the maximum time.
Stage slowest_stage(const DelayBreakdown& d) {
  const std::array<double, 4> t = {d.t_sens, d.t_adc, d.t_com, d.t_back};
  return static_cast<Stage>(std::max_element(t.begin(), t.end()) - t.begin());
}

double per_op(double stage_ms, std::int64_t count) {
  return count > 0 ? stage_ms / (static_cast<double>(count) * kNsToMs) : 0.0;
}

void check_anchors(const Anchors& a) {
  const std::array<double, 8> values = {a.fps_base,           a.fps_p2m,
                                        a.t_back_base,        a.t_back_p2m,
                                        a.sens_latency_ratio, a.total_latency_ratio,
                                        a.sens_energy_ratio,  a.tot_energy_ratio};
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw Error(ErrorKind::validation,
                  std::string("anchors: ") + kAnchorNames[i] + " must be positive");
}

}  // namespace

Anchors anchors_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::parse, "anchors: expected a JSON object");
  Anchors a;
  std::array<double*, 8> fields = {&a.fps_base,           &a.fps_p2m,
                                   &a.t_back_base,        &a.t_back_p2m,
                                   &a.sens_latency_ratio, &a.total_latency_ratio,
                                   &a.sens_energy_ratio,  &a.tot_energy_ratio};
  for (const auto& [key, value] : j.items()) {
    auto it = std::find(kAnchorNames.begin(), kAnchorNames.end(), key);
    if (it == kAnchorNames.end())
      throw Error(ErrorKind::validation, "anchors: unknown key '" + key + "'");
    if (!value.is_number())
      throw Error(ErrorKind::validation, "anchors: " + key + " must be a number");
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!j.contains(kAnchorNames[i]))
      throw Error(ErrorKind::validation,
                  std::string("anchors: missing required key '") + kAnchorNames[i] + "'");
    *fields[i] = j.at(kAnchorNames[i]).get<double>();
  }
  check_anchors(a);
  return a;
}

nlohmann::json to_json(const Anchors& a) {
  return {{"fps_base", a.fps_base},
          {"fps_p2m", a.fps_p2m},
          {"t_back_base", a.t_back_base},
          {"t_back_p2m", a.t_back_p2m},
          {"sens_latency_ratio", a.sens_latency_ratio},
          {"total_latency_ratio", a.total_latency_ratio},
          {"sens_energy_ratio", a.sens_energy_ratio},
          {"tot_energy_ratio", a.tot_energy_ratio}};
}

Anchors load_anchors(const std::string& path) {
  const std::string text = read_text_file(path, "anchors");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("anchors: ") + e.what());
  }
  return anchors_from_json(j);
}

std::map<std::string, double> predicted_anchors(const CostReport& r) {
  const auto& eb = r.baseline.energy;
  const auto& ep = r.p2m.energy;
  const auto& db = r.baseline.delay;
  const auto& dp = r.p2m.delay;
  auto div = [](double n, double d) {
    return d != 0.0 ? n / d : std::numeric_limits<double>::infinity();
  };
  return {{"fps_base", r.baseline.fps},
          {"fps_p2m", r.p2m.fps},
          {"t_back_base", db.t_back},
          {"t_back_p2m", dp.t_back},
          {"sens_latency_ratio", div(db.t_sens, dp.t_sens)},
          {"total_latency_ratio", div(db.t_total, dp.t_total)},
          {"sens_energy_ratio", div(eb.e_sens, ep.e_sens)},
          {"tot_energy_ratio", div(eb.e_tot, ep.e_tot)}};
}

double CalibrationResult::max_residual() const {
  double m = 0.0;
  for (const auto& [name, r] : residuals) m = std::max(m, r);
  return m;
}

CalibrationResult calibrate(const Anchors& anchors, const WorkloadCounts& counts,
                            const HardwarePair& seed) {
  check_anchors(anchors);
  const Fixed fixed{seed.baseline.t_com_per_value * static_cast<double>(counts.raw_pixels) * kNsToMs,
                    anchors.t_back_base,
                    seed.p2m.t_com_per_value * static_cast<double>(counts.transmitted) * kNsToMs,
                    anchors.t_back_p2m};

  std::optional<Candidate> best;
  std::optional<Candidate> best_negative;
  for (int sb = sens; sb <= back; ++sb) {
    for (int sp = sens; sp <= back; ++sp) {
      Candidate c = solve(static_cast<Stage>(sb), static_cast<Stage>(sp), fixed, anchors);
      if (!std::isfinite(c.error) || c.error >= kTolerance) continue;
      auto& slot = non_negative(c.y) ? best : best_negative;
      if (!slot || c.error < slot->error) slot = c;
    }
  }
  if (!best) {
    if (best_negative)
      throw Error(ErrorKind::calibration, "calibration: " + negative_anchor(*best_negative));
    throw Error(ErrorKind::calibration,
                "calibration: no bottleneck assignment reproduces fps_base, fps_p2m, "
                "sens_latency_ratio and total_latency_ratio within 5%");
  }

  CalibrationResult result;
  result.anchors = anchors;
  HardwarePair hw = seed;
  const Eigen::Vector4d y = best->y.cwiseMax(0.0);
  hw.baseline.t_sens_per_row = per_op(y[0], counts.sensor_rows);
  hw.baseline.t_adc_cycle = per_op(y[1], counts.baseline_adc_conversions);
  hw.p2m.t_sens_per_row = per_op(y[2], counts.sensor_rows);
  hw.p2m.t_adc_cycle = per_op(y[3], counts.p2m_adc_cycles);
  hw.baseline.t_back = anchors.t_back_base;
  hw.p2m.t_back = anchors.t_back_p2m;

  // Sensing energy: the P2M operation count is the free quantity.
  const double es_b = (seed.baseline.e_pix + seed.baseline.e_adc) * static_cast<double>(counts.raw_pixels);
  const double per_op_p = seed.p2m.e_pix + seed.p2m.e_adc;
  if (!(per_op_p > 0.0) || !(es_b > 0.0))
    throw Error(ErrorKind::calibration,
                "calibration: sens_energy_ratio cannot be met with zero sensing energy");
  Accounting accounting;
  accounting.sens = {PixelCountMode::fixed, es_b / (anchors.sens_energy_ratio * per_op_p)};
  accounting.com = {PixelCountMode::transmitted, 0.0};

  // Total energy: a shared e_mac closes the remaining ratio.
  const double es_p = per_op_p * accounting.sens.fixed_count;
  const double ec_b = seed.baseline.e_com * static_cast<double>(counts.raw_pixels);
  const double ec_p = seed.p2m.e_com * static_cast<double>(counts.transmitted);
  const double m_b = static_cast<double>(counts.n_mac_baseline);
  const double m_p = static_cast<double>(counts.n_mac_p2m);
  const double coef = m_b - anchors.tot_energy_ratio * m_p;
  const double rhs = anchors.tot_energy_ratio * (es_p + ec_p) - (es_b + ec_b);
  if (std::abs(coef) > 1e-12 * std::max({m_b, anchors.tot_energy_ratio * m_p, 1.0})) {
    const double e_mac = rhs / coef;
    if (e_mac < 0.0)
      throw Error(ErrorKind::calibration, "calibration: tot_energy_ratio implies negative e_mac");
    hw.baseline.e_mac = e_mac;
    hw.p2m.e_mac = e_mac;
  }

  result.hardware = hw;
  result.accounting = accounting;

  CostReport report;
  report.counts = counts;
  const EnergyPair e = energy(counts, hw, accounting);
  const DelayPair d = delay(counts, hw);
  report.p2m.energy = e.p2m;
  report.baseline.energy = e.baseline;
  report.p2m.delay = d.p2m;
  report.baseline.delay = d.baseline;
  report.p2m.fps = d.p2m.fps_pipelined;
  report.baseline.fps = d.baseline.fps_pipelined;
  result.bottleneck_base = kStageNames[slowest_stage(d.baseline)];
  result.bottleneck_p2m = kStageNames[slowest_stage(d.p2m)];
  const auto predicted = predicted_anchors(report);
  const auto target = to_json(anchors);
  std::string worst;
  double worst_r = 0.0;
  for (const auto& [name, value] : predicted) {
    const double r = rel(value, target.at(name).get<double>());
    result.residuals[name] = r;
    if (!(r <= worst_r)) {
      worst_r = r;
      worst = name;
    }
  }
  if (!(worst_r < kTolerance))
    throw Error(ErrorKind::calibration,
                "calibration: " + worst + " residual " + std::to_string(worst_r) + " exceeds 5%");
  return result;
}

CalibrationResult calibrate(const Anchors& anchors, const FrontEndSpec& spec,
                            const BackendLayers& backend, const HardwarePair& seed) {
  CalibrationResult r = calibrate(anchors, workload_counts(spec, backend), seed);
  r.spec = spec;
  return r;
}

nlohmann::json to_json(const CalibrationResult& r) {
  nlohmann::json residuals = nlohmann::json::object();
  for (const auto& [name, value] : r.residuals) residuals[name] = value;
  return {{"spec", to_json(r.spec)},
          {"anchors", to_json(r.anchors)},
          {"hardware_baseline", to_json(r.hardware.baseline)},
          {"hardware_p2m", to_json(r.hardware.p2m)},
          {"accounting", to_json(r.accounting)},
          {"bottleneck", {{"baseline", r.bottleneck_base}, {"p2m", r.bottleneck_p2m}}},
          {"residuals", residuals},
          {"max_residual", r.max_residual()}};
}

CalibratedParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("hardware_baseline") || !j.contains("hardware_p2m"))
    throw Error(ErrorKind::validation,
                "params: expected hardware_baseline and hardware_p2m objects");
  CalibratedParams p;
  std::vector<std::string> warnings;
  const HardwarePair defaults = default_hardware();
  ParseOptions lenient{true};
  p.hardware.baseline = hardware_from_json(j.at("hardware_baseline"), defaults.baseline,
                                           "hardware_baseline", lenient, warnings);
  p.hardware.p2m =
      hardware_from_json(j.at("hardware_p2m"), defaults.p2m, "hardware_p2m", lenient, warnings);
  if (j.contains("accounting")) p.accounting = accounting_from_json(j.at("accounting"));
  return p;
}

CalibratedParams load_params(const std::string& path) {
  const std::string text = read_text_file(path, "params");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("params: ") + e.what());
  }
  return params_from_json(j);
}

}  // namespace p2m::cost
