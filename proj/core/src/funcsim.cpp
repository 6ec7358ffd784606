#include "p2m/funcsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "p2m/config.hpp"
#include "p2m/error.hpp"

namespace p2m::funcsim {

using imaging::ValueKind;

RealWeights QuantizedWeights::dequantize() const {
  RealWeights out{out_channels, kernel, std::vector<double>(levels.size())};
  for (std::size_t i = 0; i < levels.size(); ++i) out.values[i] = scale * levels[i];
  return out;
}

void QuantizedWeights::validate() const {
  if (out_channels < 1 || kernel < 1)
    throw Error(ErrorKind::validation, "weights.shape: channels and kernel must be >= 1");
  if (magnitude_bits < 1 || magnitude_bits > 30)
    throw Error(ErrorKind::validation, "weights.magnitude_bits: must be in [1, 30]");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw Error(ErrorKind::validation, "weights.scale: must be finite and > 0");
  const std::size_t expected = static_cast<std::size_t>(out_channels) * 3 * kernel * kernel;
  if (levels.size() != expected)
    throw Error(ErrorKind::shape, "weights.levels: expected " + std::to_string(expected) +
                                      " entries, got " + std::to_string(levels.size()));
  const std::int32_t limit = max_level();
  for (auto l : levels)
    if (l > limit || l < -limit)
      throw Error(ErrorKind::validation, "weights.levels: magnitude " + std::to_string(l) +
                                             " exceeds " + std::to_string(limit));
  for (int o = 0; o < out_channels; ++o) {
    auto ch = channel(o);
    if (std::all_of(ch.begin(), ch.end(), [](std::int32_t l) { return l == 0; }))
      throw Error(ErrorKind::validation,
                  "weights.levels: output channel " + std::to_string(o) + " has no nonzero weight");
  }
}

FoldedAffine FoldedAffine::identity(int channels) {
  return {std::vector<double>(static_cast<std::size_t>(channels), 1.0),
          std::vector<double>(static_cast<std::size_t>(channels), 0.0)};
}

void FoldedAffine::validate() const {
  if (gain.size() != offset.size())
    throw Error(ErrorKind::shape, "affine: gain/offset length mismatch");
  for (std::size_t i = 0; i < gain.size(); ++i) {
    if (!(gain[i] > 0.0) || !std::isfinite(gain[i]))
      throw Error(ErrorKind::validation,
                  "affine.gain[" + std::to_string(i) + "]: must be finite and > 0");
    if (!std::isfinite(offset[i]))
      throw Error(ErrorKind::validation, "affine.offset[" + std::to_string(i) + "]: not finite");
  }
}

BnParams BnParams::identity(int channels) {
  const auto n = static_cast<std::size_t>(channels);
  return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
          std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
}

bool CubicDistortion::monotone() const {
  auto slope = [&](double v) { return c1 + 2.0 * c2 * v + 3.0 * c3 * v * v; };
  if (!(input_max >= 0.0)) return false;
  if (slope(0.0) < 0.0 || slope(input_max) < 0.0) return false;
  if (c3 != 0.0) {
    const double vertex = -c2 / (3.0 * c3);
    if (vertex > 0.0 && vertex < input_max && slope(vertex) < 0.0) return false;
  }
  return true;
}

CdsSums cds_accumulate(std::span<const double> pixels, std::span<const std::int32_t> levels) {
  CdsSums sums;
  const std::size_t n = std::min(pixels.size(), levels.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t l = levels[i];
    if (l > 0) sums.positive += static_cast<double>(l) * pixels[i];
    else if (l < 0) sums.negative += static_cast<double>(-l) * pixels[i];
  }
  return sums;
}

QuantizedWeights quantize_weights(const RealWeights& weights, int magnitude_bits) {
  if (magnitude_bits < 1 || magnitude_bits > 30)
    throw Error(ErrorKind::validation, "magnitude_bits: must be in [1, 30]");
  const std::size_t expected =
      static_cast<std::size_t>(weights.out_channels) * 3 * weights.kernel * weights.kernel;
  if (weights.values.size() != expected)
    throw Error(ErrorKind::shape, "weights: expected C_o*3*K*K = " + std::to_string(expected) +
                                      " values, got " + std::to_string(weights.values.size()));
  double max_abs = 0.0;
  for (double w : weights.values) {
    if (!std::isfinite(w)) throw Error(ErrorKind::numeric_domain, "weights: non-finite value");
    max_abs = std::max(max_abs, std::abs(w));
  }
  if (max_abs == 0.0)
    throw Error(ErrorKind::numeric_domain, "weights: all-zero tensor gives a degenerate scale");

  QuantizedWeights q;
  q.out_channels = weights.out_channels;
  q.kernel = weights.kernel;
  q.magnitude_bits = magnitude_bits;
  const double qmax = static_cast<double>(q.max_level());
  q.scale = max_abs / qmax;
  q.levels.resize(weights.values.size());
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    // nearbyint under the default FE_TONEAREST mode: round half to even.
    const double level = std::nearbyint(weights.values[i] * qmax / max_abs);
    q.levels[i] = static_cast<std::int32_t>(level);
  }
  q.validate();
  return q;
}

FeatureMap pixel_conv(const FeatureMap& input, const QuantizedWeights& weights,
                      const ConvSpec& conv, const ConvOptions& options) {
  if (input.channels() != 3)
    throw Error(ErrorKind::shape,
                "pixel_conv: expected 3 input channels, got " + std::to_string(input.channels()));
  if (weights.kernel != conv.kernel || weights.out_channels != conv.out_channels)
    throw Error(ErrorKind::shape, "pixel_conv: weight shape " +
                                      std::to_string(weights.out_channels) + "x3x" +
                                      std::to_string(weights.kernel) + "x" +
                                      std::to_string(weights.kernel) + " does not match conv spec");
  if (options.distortion && !options.distortion->monotone())
    throw Error(ErrorKind::validation, "distortion: cubic is not monotone on [0, input_max]");

  const int k = conv.kernel;
  const Extent2D out_ext = output_extent(input.extent(), k, conv.stride, conv.padding);
  if (!out_ext.positive()) throw Error(ErrorKind::shape, "pixel_conv: empty output shape");

  FeatureMap out(weights.out_channels, out_ext.height, out_ext.width, ValueKind::real());
  std::vector<double> window(static_cast<std::size_t>(3) * k * k);
  for (std::int64_t oy = 0; oy < out_ext.height; ++oy) {
    for (std::int64_t ox = 0; ox < out_ext.width; ++ox) {
      const std::int64_t top = oy * conv.stride - conv.padding;
      const std::int64_t left = ox * conv.stride - conv.padding;
      std::size_t i = 0;
      for (int c = 0; c < 3; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          const std::int64_t y = top + ky;
          for (int kx = 0; kx < k; ++kx, ++i) {
            const std::int64_t x = left + kx;
            double v = 0.0;
            if (y >= 0 && y < input.height() && x >= 0 && x < input.width()) v = input.at(c, y, x);
            if (options.distortion) v = options.distortion->apply(v);
            window[i] = v;
          }
        }
      }
      for (int o = 0; o < weights.out_channels; ++o) {
        const CdsSums sums = cds_accumulate(window, weights.channel(o));
        out.at(o, oy, ox) = weights.scale * sums.difference();
      }
    }
  }
  return out;
}

FoldedAffine fold_bn(const BnParams& bn) {
  const std::size_t n = bn.gamma.size();
  if (bn.beta.size() != n || bn.mean.size() != n || bn.var.size() != n || bn.eps.size() != n)
    throw Error(ErrorKind::shape, "bn: gamma/beta/mean/var/eps lengths differ");
  FoldedAffine out;
  out.gain.resize(n);
  out.offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = bn.var[i] + bn.eps[i];
    if (!(denom > 0.0))
      throw Error(ErrorKind::numeric_domain,
                  "bn: var + eps must be > 0 for channel " + std::to_string(i));
    out.gain[i] = bn.gamma[i] / std::sqrt(denom);
    out.offset[i] = bn.beta[i] - out.gain[i] * bn.mean[i];
  }
  return out;
}

FeatureMap apply_affine(const FeatureMap& input, const FoldedAffine& affine) {
  if (affine.gain.size() != static_cast<std::size_t>(input.channels()) ||
      affine.offset.size() != affine.gain.size())
    throw Error(ErrorKind::shape, "affine: channel count does not match input");
  FeatureMap out(input.channels(), input.height(), input.width(), ValueKind::real());
  for (int c = 0; c < input.channels(); ++c) {
    const double g = affine.gain[static_cast<std::size_t>(c)];
    const double b = affine.offset[static_cast<std::size_t>(c)];
    for (std::int64_t y = 0; y < input.height(); ++y)
      for (std::int64_t x = 0; x < input.width(); ++x) out.at(c, y, x) = g * input.at(c, y, x) + b;
  }
  return out;
}

std::int64_t adc_code(double x, const AdcTransfer& transfer) {
  const double max_code = static_cast<double>(transfer.max_code());
  const double ramp = std::max(x, 0.0) / transfer.full_scale * max_code;
  // std::round: half away from zero, the count at which the ramp crosses.
  return static_cast<std::int64_t>(std::clamp(std::round(ramp), 0.0, max_code));
}

FeatureMap relu_adc(const FeatureMap& input, const AdcTransfer& transfer) {
  if (!(transfer.full_scale > 0.0) || !std::isfinite(transfer.full_scale))
    throw Error(ErrorKind::validation, "adc.full_scale: must be finite and > 0");
  if (transfer.bits < 1 || transfer.bits > 16)
    throw Error(ErrorKind::validation, "adc.bits: must be in [1, 16]");
  FeatureMap out(input.channels(), input.height(), input.width(),
                 ValueKind::quantized(transfer.bits));
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(adc_code(src[i], transfer));
  return out;
}

FeatureMap dequantize(const FeatureMap& codes, const AdcTransfer& transfer) {
  FeatureMap out(codes.channels(), codes.height(), codes.width(), ValueKind::real());
  auto src = codes.data();
  auto dst = out.data();
  const double lsb = transfer.lsb();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * lsb;
  return out;
}

FeatureMap pool(const FeatureMap& input, const PoolSpec& spec) {
  if (spec.kind == PoolKind::none || !spec.window)
    throw Error(ErrorKind::validation, "pool: kind must be max or avg");
  if (!input.kind().is_quantized() || input.kind().is_signed)
    throw Error(ErrorKind::validation, "pool: input must hold unsigned quantized codes");
  const PoolWindow& w = *spec.window;
  const Extent2D out_ext = output_extent(input.extent(), w.kernel, w.stride, w.padding);
  if (!out_ext.positive())
    throw Error(ErrorKind::shape, "pool: output shape " + std::to_string(out_ext.height) + "x" +
                                      std::to_string(out_ext.width) + " is empty");

  FeatureMap out(input.channels(), out_ext.height, out_ext.width, input.kind());
  for (int c = 0; c < input.channels(); ++c) {
    for (std::int64_t oy = 0; oy < out_ext.height; ++oy) {
      for (std::int64_t ox = 0; ox < out_ext.width; ++ox) {
        const std::int64_t top = oy * w.stride - w.padding;
        const std::int64_t left = ox * w.stride - w.padding;
        std::int64_t sum = 0;
        std::int64_t count = 0;
        std::int64_t best = 0;
        bool touched_pad = false;
        bool any = false;
        for (int ky = 0; ky < w.kernel; ++ky) {
          for (int kx = 0; kx < w.kernel; ++kx) {
            const std::int64_t y = top + ky;
            const std::int64_t x = left + kx;
            if (y < 0 || y >= input.height() || x < 0 || x >= input.width()) {
              touched_pad = true;
              continue;
            }
            const auto v = static_cast<std::int64_t>(input.at(c, y, x));
            best = any ? std::max(best, v) : v;
            any = true;
            sum += v;
            ++count;
          }
        }
        double result = 0.0;
        if (spec.kind == PoolKind::max) {
          result = static_cast<double>(touched_pad ? std::max<std::int64_t>(best, 0) : best);
        } else if (count > 0) {
          // Codes are non-negative, so half-away rounding is floor((2s + n) / 2n).
          result = static_cast<double>((2 * sum + count) / (2 * count));
        }
        out.at(c, oy, ox) = result;
      }
    }
  }
  return out;
}

namespace {

void check_frame_matches(const BayerFrame& frame, const FrontEndSpec& spec) {
  if (frame.height() != spec.geometry.height || frame.width() != spec.geometry.width)
    throw Error(ErrorKind::shape, "front end: frame " + std::to_string(frame.height()) + "x" +
                                      std::to_string(frame.width()) + " does not match sensor " +
                                      std::to_string(spec.geometry.height) + "x" +
                                      std::to_string(spec.geometry.width));
}

FeatureMap real_conv(const FeatureMap& input, const RealWeights& weights, const ConvSpec& conv) {
  const int k = conv.kernel;
  const Extent2D out_ext = output_extent(input.extent(), k, conv.stride, conv.padding);
  if (!out_ext.positive()) throw Error(ErrorKind::shape, "reference conv: empty output shape");
  FeatureMap out(weights.out_channels, out_ext.height, out_ext.width, ValueKind::real());
  for (int o = 0; o < weights.out_channels; ++o)
    for (std::int64_t oy = 0; oy < out_ext.height; ++oy)
      for (std::int64_t ox = 0; ox < out_ext.width; ++ox) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const std::int64_t y = oy * conv.stride - conv.padding + ky;
              const std::int64_t x = ox * conv.stride - conv.padding + kx;
              if (y < 0 || y >= input.height() || x < 0 || x >= input.width()) continue;
              acc += weights.at(o, c, ky, kx) * input.at(c, y, x);
            }
        out.at(o, oy, ox) = acc;
      }
  return out;
}

FeatureMap real_pool(const FeatureMap& input, const PoolSpec& spec) {
  const PoolWindow& w = *spec.window;
  const Extent2D out_ext = output_extent(input.extent(), w.kernel, w.stride, w.padding);
  if (!out_ext.positive()) throw Error(ErrorKind::shape, "reference pool: empty output shape");
  FeatureMap out(input.channels(), out_ext.height, out_ext.width, ValueKind::real());
  for (int c = 0; c < input.channels(); ++c)
    for (std::int64_t oy = 0; oy < out_ext.height; ++oy)
      for (std::int64_t ox = 0; ox < out_ext.width; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        int count = 0;
        for (int ky = 0; ky < w.kernel; ++ky)
          for (int kx = 0; kx < w.kernel; ++kx) {
            const std::int64_t y = oy * w.stride - w.padding + ky;
            const std::int64_t x = ox * w.stride - w.padding + kx;
            if (y < 0 || y >= input.height() || x < 0 || x >= input.width()) {
              best = std::max(best, 0.0);
              continue;
            }
            best = std::max(best, input.at(c, y, x));
            sum += input.at(c, y, x);
            ++count;
          }
        out.at(c, oy, ox) = spec.kind == PoolKind::max ? best : (count ? sum / count : 0.0);
      }
  return out;
}

}  // namespace

FrontEndResult run_front_end(const BayerFrame& frame, const FrontEndSpec& spec,
                             const QuantizedWeights& weights, const FoldedAffine& affine,
                             const AdcTransfer& transfer, const ConvOptions& options) {
  if (auto v = validate_spec(spec); !v.empty()) throw Error(ErrorKind::validation, v.front());
  check_frame_matches(frame, spec);
  weights.validate();
  affine.validate();
  if (transfer.bits != spec.activation_bits)
    throw Error(ErrorKind::validation, "adc.bits: must equal activation_bits");

  const FeatureMap rgb = imaging::demosaic(frame, spec.demosaic_mode);
  const FeatureMap conv = pixel_conv(rgb, weights, spec.conv, options);
  const FeatureMap analog = apply_affine(conv, affine);
  FeatureMap codes = relu_adc(analog, transfer);
  FrontEndResult result;
  result.conv_extent = conv.extent();
  result.output = spec.pool.kind == PoolKind::none ? std::move(codes) : pool(codes, spec.pool);
  result.transmitted_values = static_cast<std::int64_t>(result.output.size());
  return result;
}

FeatureMap reference_front_end(const BayerFrame& frame, const FrontEndSpec& spec,
                               const RealWeights& weights, const BnParams& bn) {
  if (auto v = validate_spec(spec); !v.empty()) throw Error(ErrorKind::validation, v.front());
  check_frame_matches(frame, spec);
  if (weights.kernel != spec.conv.kernel || weights.out_channels != spec.conv.out_channels)
    throw Error(ErrorKind::shape, "reference: weight shape does not match conv spec");
  if (bn.channels() != static_cast<std::size_t>(spec.conv.out_channels))
    throw Error(ErrorKind::shape, "reference: bn channel count does not match conv spec");

  const FeatureMap rgb = imaging::demosaic(frame, spec.demosaic_mode);
  FeatureMap act = real_conv(rgb, weights, spec.conv);
  for (int c = 0; c < act.channels(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double denom = bn.var[i] + bn.eps[i];
    if (!(denom > 0.0)) throw Error(ErrorKind::numeric_domain, "bn: var + eps must be > 0");
    const double sd = std::sqrt(denom);
    for (std::int64_t y = 0; y < act.height(); ++y)
      for (std::int64_t x = 0; x < act.width(); ++x) {
        const double normalized = (act.at(c, y, x) - bn.mean[i]) / sd;
        act.at(c, y, x) = std::max(0.0, bn.gamma[i] * normalized + bn.beta[i]);
      }
  }
  if (spec.pool.kind == PoolKind::none) return act;
  return real_pool(act, spec.pool);
}

double analytic_full_scale(const QuantizedWeights& weights, const FoldedAffine& affine,
                           double input_max) {
  double best = 0.0;
  for (int o = 0; o < weights.out_channels; ++o) {
    double positive_levels = 0.0;
    for (auto l : weights.channel(o))
      if (l > 0) positive_levels += l;
    const auto i = static_cast<std::size_t>(o);
    const double peak = affine.gain[i] * weights.scale * positive_levels * input_max + affine.offset[i];
    best = std::max(best, peak);
  }
  return best > 0.0 ? best : 1.0;
}

double calibrate_full_scale(std::span<const BayerFrame> frames, const FrontEndSpec& spec,
                            const QuantizedWeights& weights, const FoldedAffine& affine,
                            double percentile) {
  const double input_max = std::ldexp(1.0, spec.geometry.pixel_bit_depth) - 1.0;
  if (frames.empty()) return analytic_full_scale(weights, affine, input_max);
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw Error(ErrorKind::validation, "calibration percentile must be in (0, 100]");
  std::vector<double> magnitudes;
  for (const auto& frame : frames) {
    check_frame_matches(frame, spec);
    const FeatureMap analog =
        apply_affine(pixel_conv(imaging::demosaic(frame, spec.demosaic_mode), weights, spec.conv),
                     affine);
    for (double v : analog.data()) magnitudes.push_back(std::abs(v));
  }
  const auto n = magnitudes.size();
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(magnitudes.begin(), magnitudes.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   magnitudes.end());
  const double value = magnitudes[rank - 1];
  return value > 0.0 ? value : analytic_full_scale(weights, affine, input_max);
}

nlohmann::json to_json(const QuantizedWeights& w) {
  return {{"shape", {w.out_channels, 3, w.kernel, w.kernel}},
          {"magnitude_bits", w.magnitude_bits},
          {"scale", w.scale},
          {"levels", w.levels}};
}

QuantizedWeights weights_from_json(const nlohmann::json& j) {
  try {
    QuantizedWeights w;
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 4 || shape[1] != 3 || shape[2] != shape[3])
      throw Error(ErrorKind::shape, "weights.shape: expected [C_o, 3, K, K]");
    w.out_channels = shape[0];
    w.kernel = shape[2];
    w.magnitude_bits = j.at("magnitude_bits").get<int>();
    w.scale = j.at("scale").get<double>();
    w.levels = j.at("levels").get<std::vector<std::int32_t>>();
    w.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("weights: ") + e.what());
  }
}

QuantizedWeights load_weights(const std::string& path) {
  const std::string text = read_text_file(path, "weights");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, "weights: " + std::string(e.what()));
  }
  return weights_from_json(j);
}

nlohmann::json to_json(const BnParams& bn) {
  return {{"gamma", bn.gamma}, {"beta", bn.beta}, {"mean", bn.mean}, {"var", bn.var}, {"eps", bn.eps}};
}

BnParams bn_from_json(const nlohmann::json& j) {
  try {
    BnParams bn;
    bn.gamma = j.at("gamma").get<std::vector<double>>();
    bn.beta = j.at("beta").get<std::vector<double>>();
    bn.mean = j.at("mean").get<std::vector<double>>();
    bn.var = j.at("var").get<std::vector<double>>();
    const auto& eps = j.at("eps");
    if (eps.is_number()) bn.eps.assign(bn.gamma.size(), eps.get<double>());
    else bn.eps = eps.get<std::vector<double>>();
    const std::size_t n = bn.gamma.size();
    if (bn.beta.size() != n || bn.mean.size() != n || bn.var.size() != n || bn.eps.size() != n)
      throw Error(ErrorKind::shape, "bn: gamma/beta/mean/var/eps lengths differ");
    return bn;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("bn: ") + e.what());
  }
}

BnParams load_bn(const std::string& path) {
  const std::string text = read_text_file(path, "bn");
  try {
    return bn_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, "bn: " + std::string(e.what()));
  }
}

}  // namespace p2m::funcsim
