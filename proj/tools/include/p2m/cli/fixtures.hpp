#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2m/funcsim.hpp"

namespace p2m::cli {

/// Deterministic synthetic RGGB frame: smooth gradients, a few bright blobs
/// and low-amplitude noise. Bit-identical on every platform for a given seed.
imaging::BayerFrame synthetic_frame(std::int64_t height, std::int64_t width, int bit_depth,
                                    std::uint64_t seed);

/// Real weights in [-1, 1), C_o x 3 x K x K.
funcsim::RealWeights synthetic_weights(int out_channels, int kernel, std::uint64_t seed);

funcsim::BnParams synthetic_bn(int channels, std::uint64_t seed);

/// Writes the standard fixture set into dir; returns the files written.
std::vector<std::string> write_fixtures(const std::string& dir);

}  // namespace p2m::cli
