#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/model.hpp"

namespace p2m {

struct Config {
  FrontEndSpec spec;
  HardwarePair hardware = default_hardware();
  /// Unknown keys seen in lenient mode.
  std::vector<std::string> warnings;
};

struct ParseOptions {
  /// Downgrade unknown keys from errors to warnings.
  bool lenient = false;
};

/// Parses a JSON config document. Throws Error{parse} with line/column on
/// malformed JSON and Error{validation} naming the field on any invariant
/// violation, missing required key, or (strict mode) unknown key.
Config parse_config(std::string_view text, ParseOptions options = {});
Config load_config(const std::string& path, ParseOptions options = {});

std::string serialize_config(const Config& config);

nlohmann::json to_json(const FrontEndSpec& spec);
nlohmann::json to_json(const HardwareParams& params);
FrontEndSpec spec_from_json(const nlohmann::json& j, ParseOptions options,
                            std::vector<std::string>& warnings);
HardwareParams hardware_from_json(const nlohmann::json& j, const HardwareParams& defaults,
                                  std::string_view where, ParseOptions options,
                                  std::vector<std::string>& warnings);

std::string read_text_file(const std::string& path, std::string_view what);

}  // namespace p2m
