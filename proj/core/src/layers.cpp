#include "p2m/layers.hpp"

#include "p2m/config.hpp"
#include "p2m/error.hpp"

namespace p2m::cost {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::fc: return "fc";
    case LayerKind::pool: return "pool";
    case LayerKind::upsample: return "upsample";
  }
  return "conv";
}

int LayerSpec::output_channels() const {
  return (kind == LayerKind::pool || kind == LayerKind::upsample) ? in_channels : out_channels;
}

Extent2D LayerSpec::output() const {
  switch (kind) {
    case LayerKind::conv:
    case LayerKind::pool:
      return output_extent(Extent2D{in_height, in_width}, kernel, stride, padding);
    case LayerKind::fc:
      return {1, 1};
    case LayerKind::upsample:
      return {in_height * scale, in_width * scale};
  }
  return {};
}

std::int64_t LayerSpec::macs() const {
  switch (kind) {
    case LayerKind::conv:
      return static_cast<std::int64_t>(kernel) * kernel * in_channels * out_channels *
             output().area();
    case LayerKind::fc:
      return static_cast<std::int64_t>(in_channels) * out_channels;
    default:
      return 0;
  }
}

namespace {

void check_layer(const LayerSpec& l, std::size_t i) {
  const std::string where = "layer " + std::to_string(i) + (l.name.empty() ? "" : " (" + l.name + ")");
  if (l.in_channels < 1) throw Error(ErrorKind::shape, where + ": in_channels must be >= 1");
  if ((l.kind == LayerKind::conv || l.kind == LayerKind::fc) && l.out_channels < 1)
    throw Error(ErrorKind::shape, where + ": out_channels must be >= 1");
  if (l.kind == LayerKind::conv || l.kind == LayerKind::pool) {
    if (l.kernel < 1 || l.stride < 1 || l.padding < 0 || l.padding >= l.kernel)
      throw Error(ErrorKind::shape, where + ": invalid kernel/stride/padding");
    if (l.in_height < 1 || l.in_width < 1 || !l.output().positive())
      throw Error(ErrorKind::shape, where + ": empty output shape");
  }
  if (l.kind == LayerKind::upsample && l.scale < 1)
    throw Error(ErrorKind::shape, where + ": upsample scale must be >= 1");
}

}  // namespace

std::int64_t mac_count(std::span<const LayerSpec> layers) {
  std::int64_t total = 0;
  bool have_prev = false;
  int prev_channels = 0;
  Extent2D prev_extent;
  bool prev_flat = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    check_layer(l, i);
    if (have_prev && !l.branch) {
      const std::string where = "layer " + std::to_string(i) +
                                (l.name.empty() ? "" : " (" + l.name + ")");
      if (l.kind == LayerKind::fc) {
        const std::int64_t expected =
            prev_flat ? prev_channels : static_cast<std::int64_t>(prev_channels) * prev_extent.area();
        if (l.in_channels != expected)
          throw Error(ErrorKind::shape, where + ": fc expects " + std::to_string(expected) +
                                            " inputs, declares " + std::to_string(l.in_channels));
      } else {
        if (prev_flat)
          throw Error(ErrorKind::shape, where + ": spatial layer cannot follow an fc layer");
        if (l.in_channels != prev_channels || l.in_height != prev_extent.height ||
            l.in_width != prev_extent.width)
          throw Error(ErrorKind::shape,
                      where + ": input " + std::to_string(l.in_channels) + "x" +
                          std::to_string(l.in_height) + "x" + std::to_string(l.in_width) +
                          " does not match previous output " + std::to_string(prev_channels) +
                          "x" + std::to_string(prev_extent.height) + "x" +
                          std::to_string(prev_extent.width));
      }
    }
    total += l.macs();
    if (!l.branch) {
      have_prev = true;
      prev_channels = l.output_channels();
      prev_extent = l.output();
      prev_flat = l.kind == LayerKind::fc;
    }
  }
  return total;
}

namespace {

LayerSpec conv(std::string name, int cin, int cout, int k, int s, int p, Extent2D in,
               bool branch = false) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.name = std::move(name);
  l.in_channels = cin;
  l.out_channels = cout;
  l.kernel = k;
  l.stride = s;
  l.padding = p;
  l.in_height = in.height;
  l.in_width = in.width;
  l.branch = branch;
  return l;
}

}  // namespace

std::vector<LayerSpec> resnet50_stem(Extent2D rgb) {
  std::vector<LayerSpec> out;
  out.push_back(conv("stem.conv", 3, 64, 7, 2, 3, rgb));
  LayerSpec pool;
  pool.kind = LayerKind::pool;
  pool.name = "stem.maxpool";
  pool.in_channels = 64;
  pool.kernel = 3;
  pool.stride = 2;
  pool.padding = 1;
  const Extent2D c = out.back().output();
  pool.in_height = c.height;
  pool.in_width = c.width;
  out.push_back(pool);
  return out;
}

std::vector<LayerSpec> resnet50_stages(int in_channels, Extent2D input) {
  struct Stage { int width; int blocks; int stride; };
  constexpr Stage stages[] = {{64, 3, 1}, {128, 4, 2}, {256, 6, 2}, {512, 3, 2}};
  std::vector<LayerSpec> out;
  int channels = in_channels;
  Extent2D extent = input;
  for (int si = 0; si < 4; ++si) {
    const Stage& st = stages[si];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string prefix = "layer" + std::to_string(si + 1) + "." + std::to_string(b);
      const int stride = b == 0 ? st.stride : 1;
      const Extent2D block_in = extent;
      const int block_channels = channels;
      out.push_back(conv(prefix + ".conv1", channels, st.width, 1, 1, 0, extent));
      out.push_back(conv(prefix + ".conv2", st.width, st.width, 3, stride, 1, out.back().output()));
      out.push_back(conv(prefix + ".conv3", st.width, st.width * 4, 1, 1, 0, out.back().output()));
      const Extent2D block_out = out.back().output();
      if (b == 0)
        out.push_back(conv(prefix + ".downsample", block_channels, st.width * 4, 1, stride, 0,
                           block_in, true));
      channels = st.width * 4;
      extent = block_out;
    }
  }
  return out;
}

BackendLayers default_backend(const FrontEndSpec& spec) {
  BackendLayers b;
  const Extent2D rgb = spec.conv_input();
  b.baseline = resnet50_stem(rgb);
  const auto& pool = b.baseline.back();
  auto stages = resnet50_stages(64, pool.output());
  b.baseline.insert(b.baseline.end(), stages.begin(), stages.end());

  const Extent2D sensor_out = spec.transmitted_extent();
  const std::int64_t min_h = (rgb.height + 3) / 4;
  const std::int64_t min_w = (rgb.width + 3) / 4;
  int factor = 1;
  while (sensor_out.height * factor < min_h || sensor_out.width * factor < min_w) ++factor;
  Extent2D backend_in = sensor_out;
  if (factor > 1) {
    LayerSpec up;
    up.kind = LayerKind::upsample;
    up.name = "upsample";
    up.in_channels = spec.conv.out_channels;
    up.in_height = sensor_out.height;
    up.in_width = sensor_out.width;
    up.scale = factor;
    b.p2m.push_back(up);
    backend_in = up.output();
  }
  auto p2m_stages = resnet50_stages(spec.conv.out_channels, backend_in);
  b.p2m.insert(b.p2m.end(), p2m_stages.begin(), p2m_stages.end());
  return b;
}

nlohmann::json to_json(const LayerSpec& l) {
  nlohmann::json j = {{"kind", std::string(to_string(l.kind))},
                      {"in_channels", l.in_channels},
                      {"in_height", l.in_height},
                      {"in_width", l.in_width}};
  if (!l.name.empty()) j["name"] = l.name;
  if (l.kind == LayerKind::conv || l.kind == LayerKind::fc) j["out_channels"] = l.out_channels;
  if (l.kind == LayerKind::conv || l.kind == LayerKind::pool) {
    j["kernel"] = l.kernel;
    j["stride"] = l.stride;
    j["padding"] = l.padding;
  }
  if (l.kind == LayerKind::upsample) j["scale"] = l.scale;
  if (l.branch) j["branch"] = true;
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  try {
    LayerSpec l;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "conv") l.kind = LayerKind::conv;
    else if (kind == "fc") l.kind = LayerKind::fc;
    else if (kind == "pool") l.kind = LayerKind::pool;
    else if (kind == "upsample") l.kind = LayerKind::upsample;
    else throw Error(ErrorKind::validation, "layer.kind: unknown kind '" + kind + "'");
    l.name = j.value("name", std::string());
    l.in_channels = j.at("in_channels").get<int>();
    l.out_channels = j.value("out_channels", 0);
    l.kernel = j.value("kernel", 1);
    l.stride = j.value("stride", 1);
    l.padding = j.value("padding", 0);
    l.in_height = j.value("in_height", std::int64_t{1});
    l.in_width = j.value("in_width", std::int64_t{1});
    l.scale = j.value("scale", 1);
    l.branch = j.value("branch", false);
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("layer: ") + e.what());
  }
}

nlohmann::json to_json(const BackendLayers& layers) {
  nlohmann::json base = nlohmann::json::array(), p2m = nlohmann::json::array();
  for (const auto& l : layers.baseline) base.push_back(to_json(l));
  for (const auto& l : layers.p2m) p2m.push_back(to_json(l));
  return {{"baseline", base}, {"p2m", p2m}};
}

BackendLayers backend_from_json(const nlohmann::json& j) {
  BackendLayers b;
  try {
    for (const auto& l : j.at("baseline")) b.baseline.push_back(layer_from_json(l));
    for (const auto& l : j.at("p2m")) b.p2m.push_back(layer_from_json(l));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("backend: ") + e.what());
  }
  return b;
}

BackendLayers load_backend(const std::string& path) {
  const std::string text = read_text_file(path, "backend");
  try {
    return backend_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("backend: ") + e.what());
  }
}

}  // namespace p2m::cost
