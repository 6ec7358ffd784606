#include "p2m/cli/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "p2m/fileio.hpp"

namespace p2m::cli {
namespace {

// Uniform in [0, 1) from the top 53 bits; avoids distribution classes whose
// output is implementation-defined.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

imaging::BayerFrame synthetic_frame(std::int64_t height, std::int64_t width, int bit_depth,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double max_code = static_cast<double>((1 << bit_depth) - 1);
  struct Blob { double y, x, r, amp; };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs)
    b = {unit(rng) * height, unit(rng) * width, 0.05 * height + unit(rng) * 0.15 * height,
         0.2 + 0.4 * unit(rng)};

  std::vector<std::uint16_t> codes(static_cast<std::size_t>(height * width));
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      const int cfa = static_cast<int>((y % 2) * 2 + (x % 2));  // 0 R, 1/2 G, 3 B
      double v = 0.15 + 0.25 * static_cast<double>(x) / width + 0.15 * static_cast<double>(y) / height;
      for (const auto& b : blobs) {
        const double dy = (y - b.y) / b.r;
        const double dx = (x - b.x) / b.r;
        const double d2 = dy * dy + dx * dx;
        if (d2 < 1.0) v += b.amp * (1.0 - d2);
      }
      v *= cfa == 0 ? 0.9 : cfa == 3 ? 0.7 : 1.0;
      v += 0.02 * (unit(rng) - 0.5);
      const double code = std::round(std::clamp(v, 0.0, 1.0) * max_code);
      codes[static_cast<std::size_t>(y * width + x)] = static_cast<std::uint16_t>(code);
    }
  }
  return imaging::BayerFrame(height, width, bit_depth, std::move(codes));
}

funcsim::RealWeights synthetic_weights(int out_channels, int kernel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  funcsim::RealWeights w;
  w.out_channels = out_channels;
  w.kernel = kernel;
  w.values.resize(static_cast<std::size_t>(out_channels) * 3 * kernel * kernel);
  for (auto& v : w.values) v = 2.0 * unit(rng) - 1.0;
  return w;
}

funcsim::BnParams synthetic_bn(int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  funcsim::BnParams bn;
  for (int c = 0; c < channels; ++c) {
    bn.gamma.push_back(0.5 + unit(rng));
    bn.beta.push_back(200.0 * (unit(rng) - 0.5));
    bn.mean.push_back(100.0 * (unit(rng) - 0.5));
    bn.var.push_back(0.5 + 1.5 * unit(rng));
    bn.eps.push_back(1e-5);
  }
  return bn;
}

std::vector<std::string> write_fixtures(const std::string& dir) {
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file_atomic(dir + "/" + name, content);
    files.push_back(name);
  };
  put("frame_1280x720.pgm", imaging::format_pgm(synthetic_frame(720, 1280, 12, 7)));
  put("frame_64x48.pgm", imaging::format_pgm(synthetic_frame(48, 64, 12, 11)));
  const auto weights = funcsim::quantize_weights(synthetic_weights(16, 7, 3), 5);
  put("weights_k7_c16.json", funcsim::to_json(weights).dump(2) + "\n");
  put("bn_c16.json", funcsim::to_json(synthetic_bn(16, 5)).dump(2) + "\n");
  return files;
}

}  // namespace p2m::cli
