#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace p2m::cli {

std::string sha256_hex(std::string_view data);

struct ManifestInput {
  std::string role;
  std::string path;
  std::string sha256;
};

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::vector<std::string> command_line;
  std::vector<ManifestInput> inputs;
  std::string tool_version;
  std::string timestamp;
  std::vector<std::string> outputs;

  /// Hashes the file contents; throws Error{not_found} if unreadable.
  void add_input(const std::string& role, const std::string& path);
  nlohmann::json to_json() const;
};

/// UTC now in ISO-8601, or the epoch when reproducible.
std::string manifest_timestamp(bool reproducible);

}  // namespace p2m::cli
