#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace p2m {

enum class PoolKind { none, max, avg };
enum class DemosaicMode { drop_green, average_green };

std::string_view to_string(PoolKind kind);
std::string_view to_string(DemosaicMode mode);
PoolKind parse_pool_kind(std::string_view text);
DemosaicMode parse_demosaic_mode(std::string_view text);

/// Height x width pair. Signed so that under-sized shapes stay representable.
struct Extent2D {
  std::int64_t height = 0;
  std::int64_t width = 0;

  std::int64_t area() const { return height * width; }
  bool positive() const { return height >= 1 && width >= 1; }
  friend bool operator==(const Extent2D&, const Extent2D&) = default;
};

/// Sliding-window output extent along one axis: floor((in - k + 2d) / s) + 1.
/// Returns a value <= 0 when the window does not fit.
std::int64_t output_extent(std::int64_t in, int kernel, int stride, int padding);
Extent2D output_extent(Extent2D in, int kernel, int stride, int padding);

/// Raw Bayer sensor array.
struct SensorGeometry {
  int width = 1280;
  int height = 720;
  int pixel_bit_depth = 12;

  std::int64_t raw_pixels() const {
    return static_cast<std::int64_t>(width) * height;
  }
  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// In-pixel convolution hyperparameters. weight_levels counts magnitude levels
/// per weight (sign carried separately), so 32 means a 5-bit magnitude.
struct ConvSpec {
  int kernel = 7;
  int stride = 2;
  int padding = 3;
  int out_channels = 16;
  int weight_levels = 32;

  int magnitude_bits() const;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct PoolWindow {
  int kernel = 3;
  int stride = 2;
  int padding = 1;
  friend bool operator==(const PoolWindow&, const PoolWindow&) = default;
};

/// Peripheral pooling. The window is absent iff kind == none.
struct PoolSpec {
  PoolKind kind = PoolKind::none;
  std::optional<PoolWindow> window;

  static PoolSpec none() { return {}; }
  static PoolSpec max(int stride, int kernel = 3, int padding = 1) {
    return {PoolKind::max, PoolWindow{kernel, stride, padding}};
  }
  static PoolSpec avg(int stride, int kernel = 3, int padding = 1) {
    return {PoolKind::avg, PoolWindow{kernel, stride, padding}};
  }
  int stride_or_zero() const { return window ? window->stride : 0; }
  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

struct FrontEndSpec {
  SensorGeometry geometry;
  ConvSpec conv;
  PoolSpec pool;
  int activation_bits = 8;
  DemosaicMode demosaic_mode = DemosaicMode::average_green;

  /// Demosaiced RGB grid the in-pixel convolution runs on (one RGB sample per
  /// RGGB quad).
  Extent2D conv_input() const;
  Extent2D conv_output() const;
  /// Spatial extent of the transmitted map (post-pool, or conv output when
  /// there is no pooling stage).
  Extent2D transmitted_extent() const;
  /// O: element count of the transmitted map.
  std::int64_t transmitted_values() const;
  /// I: RGB element count of the demosaiced frame.
  std::int64_t rgb_input_values() const;

  friend bool operator==(const FrontEndSpec&, const FrontEndSpec&) = default;
};

/// Per-operation costs for one sensor variant. Energies in pJ, per-op delays
/// in ns, back-end delay in ms.
struct HardwareParams {
  double e_pix = 0.0;
  double e_adc = 0.0;
  double e_com = 0.0;
  double e_mac = 0.0;
  double t_sens_per_row = 0.0;
  double t_adc_cycle = 0.0;
  double t_com_per_value = 0.0;
  double t_back = 0.0;

  friend bool operator==(const HardwareParams&, const HardwareParams&) = default;
};

struct HardwarePair {
  HardwareParams baseline;
  HardwareParams p2m;
  friend bool operator==(const HardwarePair&, const HardwarePair&) = default;
};

/// Energy constants from 22nm circuit simulation; delay constants are the
/// values fitted by calibrate() against the published FPS/latency anchors on
/// the stride-4 / avg-pool configuration.
HardwarePair default_hardware();

/// Published detection/tracking quality for one front-end configuration.
/// Static lookup data only.
struct AccuracyRecord {
  std::string name;
  /// Conventional-camera reference; never joined onto a design point.
  bool baseline = false;
  int stride = 0;
  PoolKind pool_kind = PoolKind::none;
  int pool_stride = 0;
  int channels = 0;
  double map_50 = 0.0;
  double map_75 = 0.0;
  double map_50_95 = 0.0;
  std::optional<double> m_idf1;
  std::optional<double> m_mota;
  std::string source;
  bool approx = false;
};

/// Returns one human-readable message per violated invariant; empty if valid.
std::vector<std::string> validate_spec(const FrontEndSpec& spec);
std::vector<std::string> validate_hardware(const HardwareParams& params,
                                           std::string_view prefix);

/// Reference configuration: K=7, D=3, C_o=16, N_b=8 on 1280x720.
FrontEndSpec reference_spec(int stride, PoolSpec pool);

/// The three published configurations: S=2/max 2, S=4/avg 2, S=6/no pool.
std::vector<FrontEndSpec> published_specs();

}  // namespace p2m
