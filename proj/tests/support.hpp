#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <random>
#include <string>

#include "p2m/error.hpp"
#include "p2m/funcsim.hpp"
#include "p2m/imaging.hpp"
#include "p2m/model.hpp"

namespace p2m::test {

inline std::string data_path(const std::string& rel) { return std::string(P2M_DATA_DIR) + "/" + rel; }
inline std::string fixture_path(const std::string& rel) {
  return std::string(P2M_FIXTURE_DIR) + "/" + rel;
}

/// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("p2m_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// File name -> contents for every regular file directly under dir.
inline std::map<std::string, std::string> dir_contents(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) out[e.path().filename().string()] = read_file(e.path().string());
  return out;
}

/// Kind of the p2m::Error thrown by f, or nullopt if nothing is thrown.
template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline imaging::BayerFrame random_frame(std::mt19937_64& rng, std::int64_t h, std::int64_t w,
                                        int bits) {
  std::vector<std::uint16_t> codes(static_cast<std::size_t>(h * w));
  const int max_code = (1 << bits) - 1;
  for (auto& c : codes) c = static_cast<std::uint16_t>(uniform_int(rng, 0, max_code));
  return imaging::BayerFrame(h, w, bits, std::move(codes));
}

inline funcsim::RealWeights random_weights(std::mt19937_64& rng, int co, int k) {
  funcsim::RealWeights w{co, k, {}};
  w.values.resize(static_cast<std::size_t>(co) * 3 * k * k);
  for (auto& v : w.values) v = uniform(rng, -1.0, 1.0);
  return w;
}

inline funcsim::BnParams random_bn(std::mt19937_64& rng, int co) {
  funcsim::BnParams bn;
  for (int c = 0; c < co; ++c) {
    bn.gamma.push_back(uniform(rng, 0.5, 2.0));
    bn.beta.push_back(uniform(rng, -50.0, 50.0));
    bn.mean.push_back(uniform(rng, -20.0, 20.0));
    bn.var.push_back(uniform(rng, 0.5, 4.0));
    bn.eps.push_back(1e-5);
  }
  return bn;
}

/// Small valid front-end spec on a raw frame of at most 64x64 (demosaiced
/// grid at most 32x32).
inline FrontEndSpec random_small_spec(std::mt19937_64& rng) {
  for (;;) {
    FrontEndSpec s;
    s.geometry.height = 2 * uniform_int(rng, 2, 32);
    s.geometry.width = 2 * uniform_int(rng, 2, 32);
    s.geometry.pixel_bit_depth = uniform_int(rng, 8, 12);
    s.conv.kernel = uniform_int(rng, 1, 7);
    s.conv.stride = uniform_int(rng, 1, 4);
    s.conv.padding = uniform_int(rng, 0, s.conv.kernel - 1);
    s.conv.out_channels = uniform_int(rng, 1, 8);
    s.conv.weight_levels = 1 << uniform_int(rng, 2, 5);
    s.activation_bits = uniform_int(rng, 4, 8);
    switch (uniform_int(rng, 0, 2)) {
      case 0: s.pool = PoolSpec::none(); break;
      case 1: s.pool = PoolSpec::max(uniform_int(rng, 1, 2), uniform_int(rng, 1, 3), 0); break;
      default: s.pool = PoolSpec::avg(uniform_int(rng, 1, 2), uniform_int(rng, 1, 3), 0); break;
    }
    if (s.pool.window && s.pool.window->kernel >= 2 && uniform_int(rng, 0, 1))
      s.pool.window->padding = 1;
    if (validate_spec(s).empty()) return s;
  }
}

}  // namespace p2m::test
