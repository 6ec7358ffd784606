#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/model.hpp"

namespace p2m::cost {

/// conv and fc carry MACs; pool and upsample (nearest neighbour) only reshape.
enum class LayerKind { conv, fc, pool, upsample };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  std::int64_t in_height = 1;
  std::int64_t in_width = 1;
  int scale = 1;        ///< upsample factor
  /// Side branch (e.g. a residual projection): validated against its own
  /// declared input but does not advance the main-path shape.
  bool branch = false;

  int output_channels() const;
  Extent2D output() const;
  std::int64_t macs() const;
};

/// Sum of per-layer MACs. Throws Error{shape} when a main-path layer's
/// declared input does not match the previous main-path layer's output.
std::int64_t mac_count(std::span<const LayerSpec> layers);

/// ResNet-50 bottleneck stages (conv2_x .. conv5_x) on a given input map.
std::vector<LayerSpec> resnet50_stages(int in_channels, Extent2D input);
/// ResNet-50 stem: 7x7/2 conv to 64 channels followed by a 3x3/2 max-pool.
std::vector<LayerSpec> resnet50_stem(Extent2D rgb);

struct BackendLayers {
  std::vector<LayerSpec> baseline;
  std::vector<LayerSpec> p2m;
};

/// Baseline: full backbone on the demosaiced RGB frame. P2M: the sensor's
/// output map, upsampled by the smallest integer factor reaching 1/4 of the
/// demosaiced frame size, into the remaining stages.
BackendLayers default_backend(const FrontEndSpec& spec);

nlohmann::json to_json(const LayerSpec& layer);
LayerSpec layer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendLayers& layers);
BackendLayers backend_from_json(const nlohmann::json& j);
BackendLayers load_backend(const std::string& path);

}  // namespace p2m::cost
