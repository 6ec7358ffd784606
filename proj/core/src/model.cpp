#include "p2m/model.hpp"

#include <bit>
#include <cmath>

#include "p2m/error.hpp"

namespace p2m {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::not_found: return "not found";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::numeric_domain: return "numeric-domain error";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::calibration: return "calibration error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

std::string_view to_string(PoolKind kind) {
  switch (kind) {
    case PoolKind::none: return "none";
    case PoolKind::max: return "max";
    case PoolKind::avg: return "avg";
  }
  return "none";
}

std::string_view to_string(DemosaicMode mode) {
  return mode == DemosaicMode::drop_green ? "drop_green" : "average_green";
}

PoolKind parse_pool_kind(std::string_view text) {
  if (text == "none" || text == "-" || text.empty()) return PoolKind::none;
  if (text == "max") return PoolKind::max;
  if (text == "avg" || text == "average") return PoolKind::avg;
  throw Error(ErrorKind::validation,
              "pool.kind: expected max|avg|none, got '" + std::string(text) + "'");
}

DemosaicMode parse_demosaic_mode(std::string_view text) {
  if (text == "drop_green") return DemosaicMode::drop_green;
  if (text == "average_green") return DemosaicMode::average_green;
  throw Error(ErrorKind::validation,
              "demosaic_mode: expected drop_green|average_green, got '" +
                  std::string(text) + "'");
}

std::int64_t output_extent(std::int64_t in, int kernel, int stride, int padding) {
  const std::int64_t span = in - kernel + 2 * static_cast<std::int64_t>(padding);
  if (span < 0) return 0;
  return span / stride + 1;
}

Extent2D output_extent(Extent2D in, int kernel, int stride, int padding) {
  return {output_extent(in.height, kernel, stride, padding),
          output_extent(in.width, kernel, stride, padding)};
}

int ConvSpec::magnitude_bits() const {
  if (weight_levels < 2) return 0;
  return std::bit_width(static_cast<unsigned>(weight_levels - 1));
}

Extent2D FrontEndSpec::conv_input() const {
  return {geometry.height / 2, geometry.width / 2};
}

Extent2D FrontEndSpec::conv_output() const {
  return output_extent(conv_input(), conv.kernel, conv.stride, conv.padding);
}

Extent2D FrontEndSpec::transmitted_extent() const {
  const Extent2D conv_out = conv_output();
  if (pool.kind == PoolKind::none || !pool.window) return conv_out;
  return output_extent(conv_out, pool.window->kernel, pool.window->stride,
                       pool.window->padding);
}

std::int64_t FrontEndSpec::transmitted_values() const {
  const Extent2D out = transmitted_extent();
  if (!out.positive()) return 0;
  return out.area() * conv.out_channels;
}

std::int64_t FrontEndSpec::rgb_input_values() const {
  return conv_input().area() * 3;
}

HardwarePair default_hardware() {
  HardwarePair hw;
  hw.baseline.e_pix = 312.0;
  hw.baseline.e_adc = 86.14;
  hw.baseline.e_com = 900.0;
  hw.baseline.e_mac = 1.568;
  hw.baseline.t_back = 15.5;

  hw.p2m.e_pix = 148.0;
  hw.p2m.e_adc = 41.9;
  hw.p2m.e_com = 900.0;
  hw.p2m.e_mac = 1.568;
  hw.p2m.t_back = 13.5;

  // Communication link shared by both variants.
  hw.baseline.t_com_per_value = 10.0;
  hw.p2m.t_com_per_value = 10.0;
  // Fitted by calibrate() on reference_spec(4, avg 2); see data/anchors.
  hw.baseline.t_sens_per_row = 138888.88888888902;
  hw.baseline.t_adc_cycle = 113.02806712962963;
  hw.p2m.t_sens_per_row = 81699.3464052288;
  hw.p2m.t_adc_cycle = 8160.319255907452;
  return hw;
}

std::vector<std::string> validate_spec(const FrontEndSpec& spec) {
  std::vector<std::string> out;
  const auto& g = spec.geometry;
  if (g.width < 1) out.push_back("sensor.width: must be >= 1");
  if (g.height < 1) out.push_back("sensor.height: must be >= 1");
  if (g.pixel_bit_depth < 8 || g.pixel_bit_depth > 16)
    out.push_back("sensor.pixel_bit_depth: must be in [8, 16]");

  const auto& c = spec.conv;
  bool conv_ok = true;
  if (c.kernel < 1) { out.push_back("conv.kernel: must be >= 1"); conv_ok = false; }
  if (c.stride < 1) { out.push_back("conv.stride: must be >= 1"); conv_ok = false; }
  if (c.padding < 0 || (c.kernel >= 1 && c.padding >= c.kernel)) {
    out.push_back("conv.padding: must satisfy 0 <= padding < kernel");
    conv_ok = false;
  }
  if (c.out_channels < 1) out.push_back("conv.out_channels: must be >= 1");
  if (c.weight_levels < 2) out.push_back("conv.weight_levels: must be >= 2");

  bool pool_ok = true;
  if (spec.pool.kind == PoolKind::none) {
    if (spec.pool.window) {
      out.push_back("pool: kernel/stride/padding must be absent when kind is none");
      pool_ok = false;
    }
  } else if (!spec.pool.window) {
    out.push_back("pool: kernel/stride/padding required when kind is " +
                  std::string(to_string(spec.pool.kind)));
    pool_ok = false;
  } else {
    const auto& w = *spec.pool.window;
    if (w.kernel < 1) { out.push_back("pool.kernel: must be >= 1"); pool_ok = false; }
    if (w.stride < 1) { out.push_back("pool.stride: must be >= 1"); pool_ok = false; }
    if (w.padding < 0 || (w.kernel >= 1 && w.padding >= w.kernel)) {
      out.push_back("pool.padding: must satisfy 0 <= padding < kernel");
      pool_ok = false;
    }
  }

  if (spec.activation_bits < 1 || spec.activation_bits > 16)
    out.push_back("activation_bits: must be in [1, 16]");

  if (conv_ok && g.width >= 1 && g.height >= 1) {
    const Extent2D conv_out = spec.conv_output();
    if (!conv_out.positive()) {
      out.push_back("conv output shape " + std::to_string(conv_out.height) + "x" +
                    std::to_string(conv_out.width) + " is empty for input " +
                    std::to_string(spec.conv_input().height) + "x" +
                    std::to_string(spec.conv_input().width));
    } else if (pool_ok && spec.pool.kind != PoolKind::none) {
      const Extent2D pooled = spec.transmitted_extent();
      if (!pooled.positive())
        out.push_back("pool output shape is empty for conv output " +
                      std::to_string(conv_out.height) + "x" +
                      std::to_string(conv_out.width));
    }
  }
  return out;
}

std::vector<std::string> validate_hardware(const HardwareParams& p,
                                           std::string_view prefix) {
  std::vector<std::string> out;
  auto check = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      out.push_back(std::string(prefix) + "." + name + ": must be finite and >= 0");
  };
  check(p.e_pix, "e_pix");
  check(p.e_adc, "e_adc");
  check(p.e_com, "e_com");
  check(p.e_mac, "e_mac");
  check(p.t_sens_per_row, "t_sens_per_row");
  check(p.t_adc_cycle, "t_adc_cycle");
  check(p.t_com_per_value, "t_com_per_value");
  check(p.t_back, "t_back");
  return out;
}

FrontEndSpec reference_spec(int stride, PoolSpec pool) {
  FrontEndSpec spec;
  spec.conv.stride = stride;
  spec.pool = pool;
  return spec;
}

std::vector<FrontEndSpec> published_specs() {
  return {reference_spec(2, PoolSpec::max(2)), reference_spec(4, PoolSpec::avg(2)),
          reference_spec(6, PoolSpec::none())};
}

}  // namespace p2m
