#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/imaging.hpp"
#include "p2m/model.hpp"

namespace p2m::funcsim {

using imaging::BayerFrame;
using imaging::FeatureMap;

/// Real-valued weights laid out C_o x 3 x K x K.
struct RealWeights {
  int out_channels = 0;
  int kernel = 0;
  std::vector<double> values;

  std::size_t index(int o, int c, int ky, int kx) const {
    return ((static_cast<std::size_t>(o) * 3 + c) * kernel + ky) * kernel + kx;
  }
  double at(int o, int c, int ky, int kx) const { return values[index(o, c, ky, kx)]; }
};

/// Width-encoded weights: signed integer levels, one transistor width step per
/// level, C_o x 3 x K x K.
struct QuantizedWeights {
  int out_channels = 0;
  int kernel = 0;
  int magnitude_bits = 0;
  double scale = 0.0;
  std::vector<std::int32_t> levels;

  std::size_t index(int o, int c, int ky, int kx) const {
    return ((static_cast<std::size_t>(o) * 3 + c) * kernel + ky) * kernel + kx;
  }
  std::int32_t at(int o, int c, int ky, int kx) const { return levels[index(o, c, ky, kx)]; }
  std::span<const std::int32_t> channel(int o) const {
    const std::size_t n = static_cast<std::size_t>(3) * kernel * kernel;
    return std::span<const std::int32_t>(levels).subspan(static_cast<std::size_t>(o) * n, n);
  }
  std::int32_t max_level() const { return (std::int32_t{1} << magnitude_bits) - 1; }
  RealWeights dequantize() const;

  /// Throws Error{validation} on shape, magnitude, or all-zero-channel faults.
  void validate() const;
};

/// Batch-norm folded to a per-channel analog gain and offset applied ahead of
/// the ADC.
struct FoldedAffine {
  std::vector<double> gain;
  std::vector<double> offset;

  static FoldedAffine identity(int channels);
  void validate() const;
};

struct BnParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> eps;

  static BnParams identity(int channels);
  std::size_t channels() const { return gamma.size(); }
};

/// Single-slope ADC: full_scale maps to code 2^bits - 1.
struct AdcTransfer {
  double full_scale = 1.0;
  int bits = 8;

  std::int64_t max_code() const { return (std::int64_t{1} << bits) - 1; }
  double lsb() const { return full_scale / static_cast<double>(max_code()); }
};

/// Optional per-pixel analog non-linearity, v -> c1 v + c2 v^2 + c3 v^3. Must
/// be monotone non-decreasing over [0, input_max].
struct CubicDistortion {
  double c1 = 1.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double input_max = 4095.0;

  double apply(double v) const { return ((c3 * v + c2) * v + c1) * v; }
  bool monotone() const;
};

struct ConvOptions {
  std::optional<CubicDistortion> distortion;
};

/// Positive-weight and negative-weight partial sums, accumulated separately as
/// the two CDS samples.
struct CdsSums {
  double positive = 0.0;
  double negative = 0.0;
  double difference() const { return positive - negative; }
};

CdsSums cds_accumulate(std::span<const double> pixels, std::span<const std::int32_t> levels);

QuantizedWeights quantize_weights(const RealWeights& weights, int magnitude_bits);

/// Zero-padded strided convolution over a 3-channel map. Returns C_o signed
/// real channels: scale * (positive_sum - negative_sum).
FeatureMap pixel_conv(const FeatureMap& input, const QuantizedWeights& weights,
                      const ConvSpec& conv, const ConvOptions& options = {});

FoldedAffine fold_bn(const BnParams& bn);
FeatureMap apply_affine(const FeatureMap& input, const FoldedAffine& affine);

std::int64_t adc_code(double x, const AdcTransfer& transfer);
FeatureMap relu_adc(const FeatureMap& input, const AdcTransfer& transfer);
FeatureMap dequantize(const FeatureMap& codes, const AdcTransfer& transfer);

/// Digital max/avg pooling over quantized codes. Padding contributes 0 to max
/// and is excluded from the average divisor; averages round half away from 0.
FeatureMap pool(const FeatureMap& input, const PoolSpec& spec);

struct FrontEndResult {
  FeatureMap output;
  Extent2D conv_extent;
  std::int64_t transmitted_values = 0;
};

FrontEndResult run_front_end(const BayerFrame& frame, const FrontEndSpec& spec,
                             const QuantizedWeights& weights, const FoldedAffine& affine,
                             const AdcTransfer& transfer, const ConvOptions& options = {});

/// Unquantized float chain: real weights, two-step BN, true ReLU, real pooling.
FeatureMap reference_front_end(const BayerFrame& frame, const FrontEndSpec& spec,
                               const RealWeights& weights, const BnParams& bn);

/// Upper bound on the pre-ReLU analog value over all inputs with codes up to
/// input_max. Used as the ADC range when no calibration set is available.
double analytic_full_scale(const QuantizedWeights& weights, const FoldedAffine& affine,
                           double input_max);

/// Percentile (nearest rank) of |pre-ReLU activations| across frames. Falls
/// back to analytic_full_scale when frames is empty or all activations are 0.
double calibrate_full_scale(std::span<const BayerFrame> frames, const FrontEndSpec& spec,
                            const QuantizedWeights& weights, const FoldedAffine& affine,
                            double percentile = 99.9);

nlohmann::json to_json(const QuantizedWeights& weights);
QuantizedWeights weights_from_json(const nlohmann::json& j);
QuantizedWeights load_weights(const std::string& path);
nlohmann::json to_json(const BnParams& bn);
BnParams bn_from_json(const nlohmann::json& j);
BnParams load_bn(const std::string& path);

}  // namespace p2m::funcsim
