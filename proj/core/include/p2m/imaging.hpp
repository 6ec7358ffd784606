#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "p2m/model.hpp"

namespace p2m::imaging {

/// How the samples of a FeatureMap are to be interpreted.
struct ValueKind {
  enum class Tag { real, quantized };
  Tag tag = Tag::real;
  int bits = 0;
  bool is_signed = false;

  static ValueKind real() { return {}; }
  static ValueKind quantized(int bits, bool is_signed = false) {
    return {Tag::quantized, bits, is_signed};
  }
  bool is_quantized() const { return tag == Tag::quantized; }
  std::int64_t min_code() const;
  std::int64_t max_code() const;
  friend bool operator==(const ValueKind&, const ValueKind&) = default;
};

std::string to_string(const ValueKind& kind);

/// Dense channels x height x width map, row-major. Quantized maps hold
/// integer-valued samples.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, std::int64_t height, std::int64_t width, ValueKind kind);
  FeatureMap(int channels, std::int64_t height, std::int64_t width, ValueKind kind,
             std::vector<double> data);

  int channels() const { return channels_; }
  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }
  Extent2D extent() const { return {height_, width_}; }
  const ValueKind& kind() const { return kind_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, std::int64_t y, std::int64_t x) { return data_[index(c, y, x)]; }
  double at(int c, std::int64_t y, std::int64_t x) const { return data_[index(c, y, x)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> channel(int c) const {
    return std::span<const double>(data_).subspan(plane_offset(c), plane_size());
  }

  /// Throws Error{validation} if any sample violates the value kind.
  void check_values() const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t plane_size() const { return static_cast<std::size_t>(height_ * width_); }
  std::size_t plane_offset(int c) const { return static_cast<std::size_t>(c) * plane_size(); }
  std::size_t index(int c, std::int64_t y, std::int64_t x) const {
    return plane_offset(c) + static_cast<std::size_t>(y * width_ + x);
  }

  int channels_ = 0;
  std::int64_t height_ = 0;
  std::int64_t width_ = 0;
  ValueKind kind_;
  std::vector<double> data_;
};

/// Raw RGGB mosaic: even rows hold R G R G ..., odd rows G B G B ...
class BayerFrame {
 public:
  BayerFrame() = default;
  BayerFrame(std::int64_t height, std::int64_t width, int bit_depth,
             std::vector<std::uint16_t> codes);

  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }
  int bit_depth() const { return bit_depth_; }
  std::uint16_t at(std::int64_t y, std::int64_t x) const {
    return codes_[static_cast<std::size_t>(y * width_ + x)];
  }
  std::span<const std::uint16_t> codes() const { return codes_; }

  friend bool operator==(const BayerFrame&, const BayerFrame&) = default;

 private:
  std::int64_t height_ = 0;
  std::int64_t width_ = 0;
  int bit_depth_ = 12;
  std::vector<std::uint16_t> codes_;
};

/// Collapses each 2x2 RGGB quad into one RGB sample. Raw codes are carried
/// unnormalized.
FeatureMap demosaic(const BayerFrame& frame, DemosaicMode mode);

using Image = std::variant<BayerFrame, FeatureMap>;

/// Plain PGM (P2) loads as a BayerFrame; plain PPM (P3) as a 3-channel real
/// map. maxval must be in [255, 65535].
Image load_image(const std::string& path);
Image parse_image(std::string_view text, std::string_view origin = "image");

std::string format_pgm(const BayerFrame& frame);
void store_bayer(const BayerFrame& frame, const std::string& path);

/// Writes <dir>/<stem>_c<i>.pgm per channel plus <dir>/<stem>.json describing
/// shape and value kind. Every sample must be an integer code that fits in
/// 16 bits once offset (signed maps are shifted by 2^(bits-1)).
/// Returns the list of files written.
std::vector<std::string> store_map(const FeatureMap& map, const std::string& dir,
                                   const std::string& stem = "map");
FeatureMap load_map(const std::string& sidecar_path);

/// Bit depth implied by a PGM/PPM maxval (4095 -> 12).
int bit_depth_for_maxval(std::int64_t maxval);

}  // namespace p2m::imaging
