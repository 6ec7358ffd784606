#include "p2m/cli/manifest.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "p2m/config.hpp"
#include "p2m/error.hpp"

namespace p2m::cli {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error(ErrorKind::io, "sha256: digest failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return ss.str();
}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  inputs.push_back({role, path, sha256_hex(read_text_file(path, role))});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& i : inputs) in.push_back({{"role", i.role}, {"path", i.path}, {"sha256", i.sha256}});
  return {{"tool", "p2m"},
          {"tool_version", tool_version},
          {"command_line", command_line},
          {"inputs", in},
          {"timestamp", timestamp},
          {"outputs", outputs}};
}

std::string manifest_timestamp(bool reproducible) {
  if (reproducible) return "1970-01-01T00:00:00Z";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace p2m::cli
