#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "p2m/error.hpp"

namespace p2m::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInternal = 4;

int exit_code(ErrorKind kind);

/// Flags shared by every subcommand.
struct CommonOptions {
  std::string config;
  std::string out;
  bool reproducible = false;
  std::optional<std::string> accounting;
  bool lenient = false;
  /// argv as recorded in the manifest.
  std::vector<std::string> command_line;
};

struct SimulateOptions {
  std::string image;
  std::string weights;
  std::optional<std::string> bn;
  std::optional<std::string> calibration_dir;
  std::optional<double> full_scale;
};

struct ScheduleOptions {
  int channel = 0;
  std::int64_t max_cycles = 32;  ///< trace cycles written; negative writes all
};

struct CostOptions {
  std::optional<std::string> backend;
  std::optional<std::string> params;
};

struct ExploreOptions {
  std::optional<std::string> params;
  std::optional<std::string> accuracy;
};

struct CalibrateOptions {
  std::optional<std::string> spec;
  std::optional<std::string> backend;
};

/// Relative paths are looked up under $P2M_CONFIG_DIR first when it is set.
std::string resolve_config_path(const std::string& path);

// Each command writes its files plus manifest.json into common.out and a
// short human summary to `log`. Failures surface as p2m::Error.
void cmd_simulate(const CommonOptions& common, const SimulateOptions& opts, std::ostream& log);
void cmd_schedule(const CommonOptions& common, const ScheduleOptions& opts, std::ostream& log);
void cmd_cost(const CommonOptions& common, const CostOptions& opts, std::ostream& log);
void cmd_explore(const CommonOptions& common, const ExploreOptions& opts, std::ostream& log);
void cmd_calibrate(const CommonOptions& common, const CalibrateOptions& opts, std::ostream& log);

/// Full command line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2m::cli
