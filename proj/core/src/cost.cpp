#include "p2m/cost.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "p2m/config.hpp"
#include "p2m/error.hpp"
#include "p2m/schedule.hpp"

namespace p2m::cost {
namespace {

constexpr double kNsToMs = 1e-6;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::optional<double> ratio(double num, double den) {
  if (den == 0.0 || !std::isfinite(den) || !std::isfinite(num)) return std::nullopt;
  return num / den;
}

nlohmann::json opt(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "inf";
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

std::string fmt(std::optional<double> v) { return v ? fmt(*v) : "\xE2\x80\x94"; }

PixelCountMode parse_mode(std::string_view text, double& fixed) {
  if (text == "conversions") return PixelCountMode::conversions;
  if (text == "raw_pixels") return PixelCountMode::raw_pixels;
  if (text == "transmitted") return PixelCountMode::transmitted;
  if (text.starts_with("fixed:")) {
    const auto num = text.substr(6);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), fixed);
    if (ec != std::errc() || ptr != num.data() + num.size() || !(fixed >= 0.0))
      throw Error(ErrorKind::validation, "accounting: bad fixed count '" + std::string(num) + "'");
    return PixelCountMode::fixed;
  }
  throw Error(ErrorKind::validation, "accounting: unknown mode '" + std::string(text) +
                                         "' (expected conversions|raw_pixels|transmitted|fixed:N)");
}

double pick(const TermAccounting& t, const WorkloadCounts& c) {
  switch (t.mode) {
    case PixelCountMode::conversions: return static_cast<double>(c.conversions);
    case PixelCountMode::raw_pixels: return static_cast<double>(c.raw_pixels);
    case PixelCountMode::transmitted: return static_cast<double>(c.transmitted);
    case PixelCountMode::fixed: return t.fixed_count;
  }
  return 0.0;
}

void finish(DelayBreakdown& d) {
  d.t_total = d.t_sens + d.t_adc + d.t_com + d.t_back;
  const double slowest = std::max({d.t_sens, d.t_adc, d.t_com, d.t_back});
  d.fps_pipelined = slowest > 0.0 ? 1000.0 / slowest : std::numeric_limits<double>::infinity();
}

}  // namespace

std::int64_t transistor_count(const ConvSpec& conv) {
  const std::int64_t per_axis = ceil_div(conv.kernel, conv.stride);
  return per_axis * per_axis * conv.out_channels;
}

double bandwidth_reduction(const FrontEndSpec& spec) {
  const std::int64_t o = spec.transmitted_values();
  if (o <= 0) throw Error(ErrorKind::shape, "bandwidth_reduction: transmitted map is empty");
  const double i = static_cast<double>(spec.rgb_input_values());
  return (i / static_cast<double>(o)) * (4.0 / 3.0) *
         (static_cast<double>(spec.geometry.pixel_bit_depth) / spec.activation_bits);
}

std::string_view to_string(PixelCountMode mode) {
  switch (mode) {
    case PixelCountMode::conversions: return "conversions";
    case PixelCountMode::raw_pixels: return "raw_pixels";
    case PixelCountMode::transmitted: return "transmitted";
    case PixelCountMode::fixed: return "fixed";
  }
  return "conversions";
}

std::string Accounting::describe() const {
  auto term = [](const TermAccounting& t) {
    std::string s(to_string(t.mode));
    if (t.mode == PixelCountMode::fixed) s += ":" + fmt(t.fixed_count);
    return s;
  };
  return "sens=" + term(sens) + ",com=" + term(com);
}

Accounting parse_accounting(std::string_view text) {
  Accounting a;
  if (text.find('=') == std::string_view::npos) {
    a.sens.mode = parse_mode(text, a.sens.fixed_count);
    return a;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::validation, "accounting: expected term=mode, got '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "sens") a.sens.mode = parse_mode(value, a.sens.fixed_count);
    else if (key == "com") a.com.mode = parse_mode(value, a.com.fixed_count);
    else throw Error(ErrorKind::validation, "accounting: unknown term '" + std::string(key) + "'");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return a;
}

nlohmann::json to_json(const Accounting& a) {
  auto term = [](const TermAccounting& t) {
    nlohmann::json j = {{"mode", std::string(to_string(t.mode))}};
    if (t.mode == PixelCountMode::fixed) j["count"] = t.fixed_count;
    return j;
  };
  return {{"sens", term(a.sens)}, {"com", term(a.com)}};
}

Accounting accounting_from_json(const nlohmann::json& j) {
  Accounting a;
  auto term = [](const nlohmann::json& t, TermAccounting& out) {
    const auto mode = t.at("mode").get<std::string>();
    double fixed = 0.0;
    out.mode = mode == "fixed" ? PixelCountMode::fixed : parse_mode(mode, fixed);
    if (out.mode == PixelCountMode::fixed) {
      out.fixed_count = t.at("count").get<double>();
      if (!(out.fixed_count >= 0.0))
        throw Error(ErrorKind::validation, "accounting: fixed count must be >= 0");
    }
  };
  try {
    if (j.contains("sens")) term(j.at("sens"), a.sens);
    if (j.contains("com")) term(j.at("com"), a.com);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("accounting: ") + e.what());
  }
  return a;
}

WorkloadCounts workload_counts(const FrontEndSpec& spec, const BackendLayers& backend) {
  if (auto v = validate_spec(spec); !v.empty()) throw Error(ErrorKind::validation, v.front());
  WorkloadCounts c;
  c.raw_pixels = spec.geometry.raw_pixels();
  c.sensor_rows = spec.geometry.height;
  const auto budget = schedule::total_conversions(spec);
  c.conversions = budget.conversions;
  c.p2m_adc_cycles = budget.total_cycles;
  c.transmitted = spec.transmitted_values();
  c.baseline_adc_conversions = c.raw_pixels;
  c.n_mac_baseline = mac_count(backend.baseline);
  c.n_mac_p2m = mac_count(backend.p2m);
  return c;
}

EnergyPair energy(const WorkloadCounts& c, const HardwarePair& hw, const Accounting& accounting) {
  EnergyPair out;
  auto& b = out.baseline;
  b.n_pix_sens = static_cast<double>(c.raw_pixels);
  b.n_pix_com = static_cast<double>(c.raw_pixels);
  b.n_mac = static_cast<double>(c.n_mac_baseline);
  b.e_sens = (hw.baseline.e_pix + hw.baseline.e_adc) * b.n_pix_sens;
  b.e_com = hw.baseline.e_com * b.n_pix_com;
  b.e_mac = hw.baseline.e_mac * b.n_mac;
  b.e_tot = b.e_sens + b.e_com + b.e_mac;

  auto& p = out.p2m;
  p.n_pix_sens = pick(accounting.sens, c);
  p.n_pix_com = pick(accounting.com, c);
  p.n_mac = static_cast<double>(c.n_mac_p2m);
  p.e_sens = (hw.p2m.e_pix + hw.p2m.e_adc) * p.n_pix_sens;
  p.e_com = hw.p2m.e_com * p.n_pix_com;
  p.e_mac = hw.p2m.e_mac * p.n_mac;
  p.e_tot = p.e_sens + p.e_com + p.e_mac;
  return out;
}

DelayPair delay(const WorkloadCounts& c, const HardwarePair& hw) {
  DelayPair out;
  auto& b = out.baseline;
  b.t_sens = hw.baseline.t_sens_per_row * static_cast<double>(c.sensor_rows) * kNsToMs;
  b.t_adc = hw.baseline.t_adc_cycle * static_cast<double>(c.baseline_adc_conversions) * kNsToMs;
  b.t_com = hw.baseline.t_com_per_value * static_cast<double>(c.raw_pixels) * kNsToMs;
  b.t_back = hw.baseline.t_back;
  finish(b);

  auto& p = out.p2m;
  p.t_sens = hw.p2m.t_sens_per_row * static_cast<double>(c.sensor_rows) * kNsToMs;
  p.t_adc = hw.p2m.t_adc_cycle * static_cast<double>(c.p2m_adc_cycles) * kNsToMs;
  p.t_com = hw.p2m.t_com_per_value * static_cast<double>(c.transmitted) * kNsToMs;
  p.t_back = hw.p2m.t_back;
  finish(p);
  return out;
}

CostReport evaluate_cost(const FrontEndSpec& spec, const HardwarePair& hw,
                         const BackendLayers& backend, const Accounting& accounting) {
  CostReport r;
  r.spec = spec;
  r.accounting = accounting;
  r.counts = workload_counts(spec, backend);
  const EnergyPair e = energy(r.counts, hw, accounting);
  const DelayPair d = delay(r.counts, hw);

  r.p2m.n_t = transistor_count(spec.conv);
  r.p2m.br = bandwidth_reduction(spec);
  r.p2m.conversions = r.counts.conversions;
  r.p2m.cycles = r.counts.p2m_adc_cycles;
  r.p2m.energy = e.p2m;
  r.p2m.delay = d.p2m;
  r.p2m.fps = d.p2m.fps_pipelined;

  r.baseline.n_t = 0;
  r.baseline.br = 1.0;
  r.baseline.conversions = r.counts.baseline_adc_conversions;
  r.baseline.cycles = r.counts.baseline_adc_conversions;
  r.baseline.energy = e.baseline;
  r.baseline.delay = d.baseline;
  r.baseline.fps = d.baseline.fps_pipelined;

  r.ratios.e_sens = ratio(e.baseline.e_sens, e.p2m.e_sens);
  r.ratios.e_com = ratio(e.baseline.e_com, e.p2m.e_com);
  r.ratios.e_mac = ratio(e.baseline.e_mac, e.p2m.e_mac);
  r.ratios.e_tot = ratio(e.baseline.e_tot, e.p2m.e_tot);
  r.ratios.t_sens = ratio(d.baseline.t_sens, d.p2m.t_sens);
  r.ratios.t_total = ratio(d.baseline.t_total, d.p2m.t_total);
  r.ratios.fps = ratio(d.p2m.fps_pipelined, d.baseline.fps_pipelined);
  return r;
}

std::vector<std::string> errata_notes() {
  return {
      "bandwidth reduction uses I/O (raw volume over transmitted volume); the O/I form "
      "evaluates below 1 for every published configuration",
      "O composes conv then pool: O = C_o * pool(conv(grid)); I = 3 * demosaiced grid",
      "spatial formulas are applied per axis on the height x width demosaiced grid",
  };
}

nlohmann::json to_json(const EnergyBreakdown& e) {
  return {{"e_sens_pJ", e.e_sens},       {"e_com_pJ", e.e_com},
          {"e_mac_pJ", e.e_mac},         {"e_tot_pJ", e.e_tot},
          {"n_pix_sens", e.n_pix_sens},  {"n_pix_com", e.n_pix_com},
          {"n_mac", e.n_mac}};
}

nlohmann::json to_json(const DelayBreakdown& d) {
  return {{"t_sens_ms", d.t_sens},   {"t_adc_ms", d.t_adc},     {"t_com_ms", d.t_com},
          {"t_back_ms", d.t_back},   {"t_total_ms", d.t_total},
          {"fps_pipelined", finite_or_null(d.fps_pipelined)}};
}

nlohmann::json to_json(const CostVector& c) {
  return {{"n_t", c.n_t},
          {"br", c.br},
          {"conversions", c.conversions},
          {"cycles", c.cycles},
          {"energy", to_json(c.energy)},
          {"delay", to_json(c.delay)},
          {"fps", finite_or_null(c.fps)}};
}

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j;
  j["spec"] = to_json(r.spec);
  j["cost_vector"] = {{"p2m", to_json(r.p2m)},
                      {"baseline", to_json(r.baseline)},
                      {"ratios",
                       {{"e_sens", opt(r.ratios.e_sens)},
                        {"e_com", opt(r.ratios.e_com)},
                        {"e_mac", opt(r.ratios.e_mac)},
                        {"e_tot", opt(r.ratios.e_tot)},
                        {"t_sens", opt(r.ratios.t_sens)},
                        {"t_total", opt(r.ratios.t_total)},
                        {"fps", opt(r.ratios.fps)}}}};
  j["errata_notes"] = errata_notes();
  j["accounting_mode"] = r.accounting.describe();
  j["counts"] = {{"raw_pixels", r.counts.raw_pixels},
                 {"sensor_rows", r.counts.sensor_rows},
                 {"conversions", r.counts.conversions},
                 {"transmitted", r.counts.transmitted},
                 {"p2m_adc_cycles", r.counts.p2m_adc_cycles},
                 {"baseline_adc_conversions", r.counts.baseline_adc_conversions},
                 {"n_mac_baseline", r.counts.n_mac_baseline},
                 {"n_mac_p2m", r.counts.n_mac_p2m}};
  return j;
}

std::string csv_header() {
  return "stride,kernel,padding,channels,activation_bits,pool_kind,pool_stride,"
         "n_t,br,o_values,conversions,p2m_cycles,"
         "p2m_e_sens_pJ,p2m_e_com_pJ,p2m_e_mac_pJ,p2m_e_tot_pJ,"
         "base_e_sens_pJ,base_e_com_pJ,base_e_mac_pJ,base_e_tot_pJ,"
         "p2m_t_sens_ms,p2m_t_adc_ms,p2m_t_com_ms,p2m_t_back_ms,p2m_t_total_ms,p2m_fps,"
         "base_t_sens_ms,base_t_adc_ms,base_t_com_ms,base_t_back_ms,base_t_total_ms,base_fps,"
         "ratio_e_sens,ratio_e_com,ratio_e_tot,ratio_t_sens,ratio_t_total,ratio_fps,accounting\n";
}

std::string csv_row(const CostReport& r) {
  const auto& s = r.spec;
  std::ostringstream ss;
  ss << s.conv.stride << ',' << s.conv.kernel << ',' << s.conv.padding << ','
     << s.conv.out_channels << ',' << s.activation_bits << ',' << to_string(s.pool.kind) << ','
     << s.pool.stride_or_zero() << ',' << r.p2m.n_t << ',' << fmt(r.p2m.br) << ','
     << r.counts.transmitted << ',' << r.p2m.conversions << ',' << r.p2m.cycles << ','
     << fmt(r.p2m.energy.e_sens) << ',' << fmt(r.p2m.energy.e_com) << ','
     << fmt(r.p2m.energy.e_mac) << ',' << fmt(r.p2m.energy.e_tot) << ','
     << fmt(r.baseline.energy.e_sens) << ',' << fmt(r.baseline.energy.e_com) << ','
     << fmt(r.baseline.energy.e_mac) << ',' << fmt(r.baseline.energy.e_tot) << ','
     << fmt(r.p2m.delay.t_sens) << ',' << fmt(r.p2m.delay.t_adc) << ','
     << fmt(r.p2m.delay.t_com) << ',' << fmt(r.p2m.delay.t_back) << ','
     << fmt(r.p2m.delay.t_total) << ',' << fmt(r.p2m.fps) << ','
     << fmt(r.baseline.delay.t_sens) << ',' << fmt(r.baseline.delay.t_adc) << ','
     << fmt(r.baseline.delay.t_com) << ',' << fmt(r.baseline.delay.t_back) << ','
     << fmt(r.baseline.delay.t_total) << ',' << fmt(r.baseline.fps) << ','
     << fmt(r.ratios.e_sens) << ',' << fmt(r.ratios.e_com) << ',' << fmt(r.ratios.e_tot) << ','
     << fmt(r.ratios.t_sens) << ',' << fmt(r.ratios.t_total) << ',' << fmt(r.ratios.fps) << ','
     << '"' << r.accounting.describe() << "\"\n";
  return ss.str();
}

}  // namespace p2m::cost
