#include "p2m/imaging.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2m/config.hpp"
#include "p2m/error.hpp"
#include "p2m/fileio.hpp"

namespace p2m::imaging {

std::int64_t ValueKind::min_code() const {
  if (!is_quantized() || !is_signed) return 0;
  return -(std::int64_t{1} << (bits - 1));
}

std::int64_t ValueKind::max_code() const {
  if (!is_quantized()) return 0;
  return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
}

std::string to_string(const ValueKind& kind) {
  if (!kind.is_quantized()) return "real";
  return (kind.is_signed ? "quantized_signed(" : "quantized(") + std::to_string(kind.bits) + ")";
}

FeatureMap::FeatureMap(int channels, std::int64_t height, std::int64_t width, ValueKind kind)
    : FeatureMap(channels, height, width, kind,
                 std::vector<double>(static_cast<std::size_t>(
                     std::max<std::int64_t>(0, channels * height * width)))) {}

FeatureMap::FeatureMap(int channels, std::int64_t height, std::int64_t width, ValueKind kind,
                       std::vector<double> data)
    : channels_(channels), height_(height), width_(width), kind_(kind), data_(std::move(data)) {
  if (channels < 0 || height < 0 || width < 0)
    throw Error(ErrorKind::shape, "feature map: negative dimension");
  if (data_.size() != static_cast<std::size_t>(channels * height * width))
    throw Error(ErrorKind::shape, "feature map: data length " + std::to_string(data_.size()) +
                                      " != channels*height*width " +
                                      std::to_string(channels * height * width));
  if (kind_.is_quantized() && (kind_.bits < 1 || kind_.bits > 32))
    throw Error(ErrorKind::validation, "feature map: quantized bits must be in [1, 32]");
}

void FeatureMap::check_values() const {
  if (!kind_.is_quantized()) return;
  const auto lo = static_cast<double>(kind_.min_code());
  const auto hi = static_cast<double>(kind_.max_code());
  for (double v : data_) {
    if (v != std::floor(v) || v < lo || v > hi)
      throw Error(ErrorKind::validation,
                  "feature map: sample " + std::to_string(v) + " outside " + to_string(kind_));
  }
}

BayerFrame::BayerFrame(std::int64_t height, std::int64_t width, int bit_depth,
                       std::vector<std::uint16_t> codes)
    : height_(height), width_(width), bit_depth_(bit_depth), codes_(std::move(codes)) {
  if (height < 2 || width < 2 || height % 2 != 0 || width % 2 != 0)
    throw Error(ErrorKind::validation, "bayer frame: dimensions " + std::to_string(height) + "x" +
                                           std::to_string(width) +
                                           " must be even (complete RGGB quads)");
  if (bit_depth < 1 || bit_depth > 16)
    throw Error(ErrorKind::validation, "bayer frame: bit depth must be in [1, 16]");
  if (codes_.size() != static_cast<std::size_t>(height * width))
    throw Error(ErrorKind::shape, "bayer frame: code count does not match dimensions");
  const std::uint32_t max_code = (1u << bit_depth) - 1u;
  for (auto c : codes_)
    if (c > max_code)
      throw Error(ErrorKind::validation, "bayer frame: code " + std::to_string(c) +
                                             " exceeds " + std::to_string(bit_depth) + "-bit range");
}

FeatureMap demosaic(const BayerFrame& frame, DemosaicMode mode) {
  const std::int64_t h = frame.height() / 2;
  const std::int64_t w = frame.width() / 2;
  FeatureMap out(3, h, w, ValueKind::real());
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double r = frame.at(2 * y, 2 * x);
      const double g1 = frame.at(2 * y, 2 * x + 1);
      const double g2 = frame.at(2 * y + 1, 2 * x);
      const double b = frame.at(2 * y + 1, 2 * x + 1);
      out.at(0, y, x) = r;
      out.at(1, y, x) = mode == DemosaicMode::drop_green ? g1 : (g1 + g2) / 2.0;
      out.at(2, y, x) = b;
    }
  }
  return out;
}

int bit_depth_for_maxval(std::int64_t maxval) {
  if (maxval < 255 || maxval > 65535)
    throw Error(ErrorKind::unsupported,
                "image: maxval " + std::to_string(maxval) + " outside supported range [255, 65535]");
  return std::bit_width(static_cast<std::uint64_t>(maxval));
}

namespace {

// Whitespace/comment aware token reader for the plain netpbm formats.
class NetpbmReader {
 public:
  NetpbmReader(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

  std::string_view token() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of file");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '#')
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::int64_t integer(std::string_view what) {
    auto tok = token();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail("malformed " + std::string(what) + " '" + std::string(tok) + "'");
    return v;
  }

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::parse, std::string(origin_) + ": " + msg + " (offset " +
                                      std::to_string(pos_) + ")");
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

struct NetpbmHeader {
  bool color = false;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t maxval = 0;
};

NetpbmHeader read_header(NetpbmReader& reader) {
  NetpbmHeader h;
  const auto magic = reader.token();
  if (magic == "P2") h.color = false;
  else if (magic == "P3") h.color = true;
  else reader.fail("unsupported magic '" + std::string(magic) + "' (expected P2 or P3)");
  h.width = reader.integer("width");
  h.height = reader.integer("height");
  h.maxval = reader.integer("maxval");
  if (h.width < 1 || h.height < 1) reader.fail("non-positive image dimensions");
  return h;
}

std::string pgm_text(std::int64_t height, std::int64_t width, std::int64_t maxval,
                     const auto& sample) {
  std::string out = "P2\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                    std::to_string(maxval) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(height * width) * 6);
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      if (x) out += ' ';
      out += std::to_string(sample(y, x));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

namespace {

struct Netpbm {
  NetpbmHeader header;
  int bit_depth = 0;
  std::vector<std::int64_t> samples;
};

Netpbm parse_netpbm(std::string_view text, std::string_view origin) {
  NetpbmReader reader(text, origin);
  Netpbm out;
  out.header = read_header(reader);
  const NetpbmHeader& h = out.header;
  out.bit_depth = bit_depth_for_maxval(h.maxval);
  const std::int64_t count = h.width * h.height * (h.color ? 3 : 1);
  out.samples.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const auto v = reader.integer("sample");
    if (v < 0 || v > h.maxval)
      reader.fail("sample " + std::to_string(v) + " outside [0, " + std::to_string(h.maxval) + "]");
    out.samples.push_back(v);
  }
  if (!reader.at_end()) reader.fail("trailing data after " + std::to_string(count) + " samples");
  return out;
}

}  // namespace

Image parse_image(std::string_view text, std::string_view origin) {
  Netpbm img = parse_netpbm(text, origin);
  const NetpbmHeader& h = img.header;
  if (!h.color) {
    std::vector<std::uint16_t> codes(img.samples.begin(), img.samples.end());
    return BayerFrame(h.height, h.width, img.bit_depth, std::move(codes));
  }
  FeatureMap map(3, h.height, h.width, ValueKind::real());
  for (std::int64_t y = 0; y < h.height; ++y)
    for (std::int64_t x = 0; x < h.width; ++x)
      for (int c = 0; c < 3; ++c)
        map.at(c, y, x) =
            static_cast<double>(img.samples[static_cast<std::size_t>((y * h.width + x) * 3 + c)]);
  return map;
}

Image load_image(const std::string& path) {
  return parse_image(read_text_file(path, "image"), path);
}

std::string format_pgm(const BayerFrame& frame) {
  const std::int64_t maxval = std::max<std::int64_t>(255, (std::int64_t{1} << frame.bit_depth()) - 1);
  return pgm_text(frame.height(), frame.width(), maxval,
                  [&](std::int64_t y, std::int64_t x) { return frame.at(y, x); });
}

void store_bayer(const BayerFrame& frame, const std::string& path) {
  write_file_atomic(path, format_pgm(frame));
}

std::vector<std::string> store_map(const FeatureMap& map, const std::string& dir,
                                   const std::string& stem) {
  namespace fs = std::filesystem;
  map.check_values();
  const ValueKind& kind = map.kind();
  const std::int64_t offset = kind.is_quantized() && kind.is_signed ? -kind.min_code() : 0;
  std::int64_t maxval = 255;
  if (kind.is_quantized()) {
    maxval = std::max<std::int64_t>(255, kind.max_code() + offset);
  } else {
    for (double v : map.data()) {
      if (v != std::floor(v) || v < 0 || v > 65535)
        throw Error(ErrorKind::unsupported,
                    "store_map: real sample " + std::to_string(v) +
                        " is not an integer code in [0, 65535]");
      maxval = std::max<std::int64_t>(maxval, static_cast<std::int64_t>(v));
    }
  }
  if (maxval > 65535) throw Error(ErrorKind::unsupported, "store_map: codes exceed 16 bits");

  std::vector<std::string> written;
  nlohmann::json sidecar;
  sidecar["channels"] = map.channels();
  sidecar["height"] = map.height();
  sidecar["width"] = map.width();
  nlohmann::json vk = {{"kind", kind.is_quantized() ? "quantized" : "real"}};
  if (kind.is_quantized()) {
    vk["bits"] = kind.bits;
    vk["signed"] = kind.is_signed;
  }
  sidecar["value_kind"] = vk;
  sidecar["offset"] = offset;
  nlohmann::json files = nlohmann::json::array();
  for (int c = 0; c < map.channels(); ++c) {
    const std::string name = stem + "_c" + std::to_string(c) + ".pgm";
    const std::string path = (fs::path(dir) / name).string();
    write_file_atomic(path, pgm_text(map.height(), map.width(), maxval,
                                     [&](std::int64_t y, std::int64_t x) {
                                       return static_cast<std::int64_t>(map.at(c, y, x)) + offset;
                                     }));
    files.push_back(name);
    written.push_back(path);
  }
  sidecar["files"] = files;
  const std::string sidecar_path = (fs::path(dir) / (stem + ".json")).string();
  write_file_atomic(sidecar_path, sidecar.dump(2) + "\n");
  written.push_back(sidecar_path);
  return written;
}

FeatureMap load_map(const std::string& sidecar_path) {
  namespace fs = std::filesystem;
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(read_text_file(sidecar_path, "map sidecar"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, sidecar_path + ": " + e.what());
  }
  try {
    const int channels = sidecar.at("channels").get<int>();
    const auto height = sidecar.at("height").get<std::int64_t>();
    const auto width = sidecar.at("width").get<std::int64_t>();
    const auto& vk = sidecar.at("value_kind");
    ValueKind kind = ValueKind::real();
    if (vk.at("kind").get<std::string>() == "quantized")
      kind = ValueKind::quantized(vk.at("bits").get<int>(), vk.value("signed", false));
    const auto offset = sidecar.value("offset", std::int64_t{0});
    const auto& files = sidecar.at("files");
    if (static_cast<int>(files.size()) != channels)
      throw Error(ErrorKind::shape, sidecar_path + ": file list does not match channel count");

    FeatureMap map(channels, height, width, kind);
    const fs::path base = fs::path(sidecar_path).parent_path();
    for (int c = 0; c < channels; ++c) {
      const std::string path = (base / files[static_cast<std::size_t>(c)].get<std::string>()).string();
      const Netpbm plane = parse_netpbm(read_text_file(path, "map channel"), path);
      if (plane.header.color || plane.header.height != height || plane.header.width != width)
        throw Error(ErrorKind::shape, path + ": plane shape disagrees with sidecar");
      for (std::int64_t y = 0; y < height; ++y)
        for (std::int64_t x = 0; x < width; ++x)
          map.at(c, y, x) =
              static_cast<double>(plane.samples[static_cast<std::size_t>(y * width + x)] - offset);
    }
    map.check_values();
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, sidecar_path + ": " + e.what());
  }
}

}  // namespace p2m::imaging
