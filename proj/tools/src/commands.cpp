#include "p2m/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <variant>

#include <CLI11.hpp>

#include "p2m/calibrate.hpp"
#include "p2m/cli/manifest.hpp"
#include "p2m/config.hpp"
#include "p2m/cost.hpp"
#include "p2m/dse.hpp"
#include "p2m/fileio.hpp"
#include "p2m/funcsim.hpp"
#include "p2m/imaging.hpp"
#include "p2m/layers.hpp"
#include "p2m/schedule.hpp"

#ifndef P2M_VERSION
#define P2M_VERSION "0.0.0"
#endif

namespace p2m::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Collects outputs and finishes with the manifest.
class OutputDir {
 public:
  explicit OutputDir(const CommonOptions& common) : common_(common) {
    if (common.out.empty()) throw Error(ErrorKind::validation, "--out: an output directory is required");
    manifest_.tool_version = P2M_VERSION;
    manifest_.timestamp = manifest_timestamp(common.reproducible);
    manifest_.command_line = common.command_line;
    if (common.reproducible)
      for (auto& arg : manifest_.command_line)
        if (arg == common.out) arg = "$OUT";
  }

  void input(const std::string& role, const std::string& path) { manifest_.add_input(role, path); }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(path(name), content);
    manifest_.outputs.push_back(name);
  }
  void record(const std::vector<std::string>& names) {
    for (const auto& n : names) manifest_.outputs.push_back(fs::path(n).filename().string());
  }
  std::string path(const std::string& name) const { return (fs::path(common_.out) / name).string(); }

  void finish() {
    std::sort(manifest_.outputs.begin(), manifest_.outputs.end());
    write_file_atomic(path("manifest.json"), manifest_.to_json().dump(2) + "\n");
  }

 private:
  const CommonOptions& common_;
  RunManifest manifest_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Config load_common_config(const CommonOptions& common, OutputDir& out, std::ostream& log) {
  if (common.config.empty()) throw Error(ErrorKind::validation, "--config: a config file is required");
  const std::string path = resolve_config_path(common.config);
  Config cfg = load_config(path, ParseOptions{common.lenient});
  out.input("config", path);
  for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
  return cfg;
}

std::vector<imaging::BayerFrame> load_calibration_set(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::not_found, "calibration set: not found (" + dir + ")");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<imaging::BayerFrame> frames;
  for (const auto& f : files) {
    auto image = imaging::load_image(f.string());
    if (!std::holds_alternative<imaging::BayerFrame>(image))
      throw Error(ErrorKind::unsupported, "calibration set: " + f.string() + " is not a raw PGM");
    frames.push_back(std::get<imaging::BayerFrame>(std::move(image)));
  }
  return frames;
}

cost::Accounting pick_accounting(const CommonOptions& common, cost::Accounting fallback) {
  return common.accounting ? cost::parse_accounting(*common.accounting) : fallback;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::shape:
    case ErrorKind::not_found:
    case ErrorKind::unsupported:
    case ErrorKind::numeric_domain:
      return kExitUsage;
    case ErrorKind::infeasible:
    case ErrorKind::calibration:
      return kExitInfeasible;
    case ErrorKind::io:
      return kExitInternal;
  }
  return kExitInternal;
}

std::string resolve_config_path(const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  if (const char* dir = std::getenv("P2M_CONFIG_DIR"); dir && *dir) {
    const fs::path candidate = fs::path(dir) / p;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

void cmd_simulate(const CommonOptions& common, const SimulateOptions& opts, std::ostream& log) {
  OutputDir out(common);
  const Config cfg = load_common_config(common, out, log);
  const FrontEndSpec& spec = cfg.spec;

  auto image = imaging::load_image(opts.image);
  if (!std::holds_alternative<imaging::BayerFrame>(image))
    throw Error(ErrorKind::unsupported, "image: expected a raw Bayer PGM (P2)");
  const auto& frame = std::get<imaging::BayerFrame>(image);
  out.input("image", opts.image);

  const auto weights = funcsim::load_weights(opts.weights);
  out.input("weights", opts.weights);
  if (weights.kernel != spec.conv.kernel || weights.out_channels != spec.conv.out_channels)
    throw Error(ErrorKind::shape, "weights: shape [" + std::to_string(weights.out_channels) + ",3," +
                                      std::to_string(weights.kernel) + "," +
                                      std::to_string(weights.kernel) + "] does not match conv " +
                                      std::to_string(spec.conv.out_channels) + "x" +
                                      std::to_string(spec.conv.kernel));

  funcsim::FoldedAffine affine = funcsim::FoldedAffine::identity(spec.conv.out_channels);
  if (opts.bn) {
    affine = funcsim::fold_bn(funcsim::load_bn(*opts.bn));
    out.input("bn", *opts.bn);
    if (static_cast<int>(affine.gain.size()) != spec.conv.out_channels)
      throw Error(ErrorKind::shape, "bn: channel count does not match conv.out_channels");
  }

  funcsim::AdcTransfer transfer;
  transfer.bits = spec.activation_bits;
  std::string source;
  if (opts.full_scale) {
    if (!(*opts.full_scale > 0.0)) throw Error(ErrorKind::validation, "--full-scale must be > 0");
    transfer.full_scale = *opts.full_scale;
    source = "flag";
  } else if (opts.calibration_dir) {
    const auto frames = load_calibration_set(*opts.calibration_dir);
    transfer.full_scale = funcsim::calibrate_full_scale(frames, spec, weights, affine);
    source = frames.empty() ? "analytic" : "calibration_set";
  } else {
    const double input_max = static_cast<double>((1 << spec.geometry.pixel_bit_depth) - 1);
    transfer.full_scale = funcsim::analytic_full_scale(weights, affine, input_max);
    source = "analytic";
  }

  const auto result = funcsim::run_front_end(frame, spec, weights, affine, transfer);
  out.record(imaging::store_map(result.output, common.out, "map"));

  const double br = cost::bandwidth_reduction(spec);
  const json summary = {
      {"conv_extent", {result.conv_extent.height, result.conv_extent.width}},
      {"output",
       {{"channels", result.output.channels()},
        {"height", result.output.height()},
        {"width", result.output.width()}}},
      {"transmitted_values", result.transmitted_values},
      {"bandwidth_reduction", br},
      {"adc", {{"bits", transfer.bits}, {"full_scale", transfer.full_scale}, {"source", source}}},
  };
  out.write("summary.json", dump(summary));
  out.finish();
  log << "simulate: output " << result.output.channels() << "x" << result.output.height() << "x"
      << result.output.width() << ", O=" << result.transmitted_values << ", BR=" << br << '\n';
}

void cmd_schedule(const CommonOptions& common, const ScheduleOptions& opts, std::ostream& log) {
  OutputDir out(common);
  const Config cfg = load_common_config(common, out, log);
  const auto trace = schedule::build_schedule(cfg.spec, opts.channel);
  const auto violations = schedule::validate_schedule(trace);
  if (!violations.empty())
    throw Error(ErrorKind::io, "schedule: internal fault, trace failed validation: " +
                                   violations.front().message);
  const auto summary = schedule::summarize(trace);
  out.write("trace.jsonl", schedule::to_jsonl(trace, opts.max_cycles));
  out.write("summary.json", dump(schedule::to_json(summary)));
  out.finish();
  log << "schedule: channel " << summary.channel << ", cycles=" << summary.cycles
      << ", closed_form=" << summary.closed_form_cycles << ", delta=" << summary.delta() << '\n';
}

void cmd_cost(const CommonOptions& common, const CostOptions& opts, std::ostream& log) {
  OutputDir out(common);
  const Config cfg = load_common_config(common, out, log);
  HardwarePair hw = cfg.hardware;
  cost::Accounting accounting;
  if (opts.params) {
    const std::string path = resolve_config_path(*opts.params);
    const auto params = cost::load_params(path);
    out.input("params", path);
    hw = params.hardware;
    accounting = params.accounting;
  }
  accounting = pick_accounting(common, accounting);
  cost::BackendLayers backend;
  if (opts.backend) {
    const std::string path = resolve_config_path(*opts.backend);
    backend = cost::load_backend(path);
    out.input("backend", path);
  } else {
    backend = cost::default_backend(cfg.spec);
  }

  const auto report = cost::evaluate_cost(cfg.spec, hw, backend, accounting);
  json j = cost::to_json(report);
  j["hardware"] = {{"baseline", to_json(hw.baseline)}, {"p2m", to_json(hw.p2m)}};
  out.write("cost.json", dump(j));
  out.write("cost.csv", cost::csv_header() + cost::csv_row(report));
  out.finish();
  log << "cost: N_t=" << report.p2m.n_t << ", BR=" << report.p2m.br
      << ", fps p2m/base=" << report.p2m.fps << "/" << report.baseline.fps << '\n';
}

void cmd_explore(const CommonOptions& common, const ExploreOptions& opts, std::ostream& log) {
  OutputDir out(common);
  if (common.config.empty()) throw Error(ErrorKind::validation, "--config: a sweep file is required");
  const std::string sweep_path = resolve_config_path(common.config);
  const auto sweep = dse::load_sweep(sweep_path);
  out.input("sweep", sweep_path);
  HardwarePair hw = default_hardware();
  cost::Accounting accounting;
  if (opts.params) {
    const std::string path = resolve_config_path(*opts.params);
    const auto params = cost::load_params(path);
    out.input("params", path);
    hw = params.hardware;
    accounting = params.accounting;
  }
  accounting = pick_accounting(common, accounting);
  std::vector<AccuracyRecord> accuracy = dse::bundled_accuracy();
  if (opts.accuracy) {
    const std::string path = resolve_config_path(*opts.accuracy);
    accuracy = dse::load_accuracy_csv(path);
    out.input("accuracy", path);
  }

  const auto result = dse::run_sweep(sweep, hw, accounting, accuracy);
  out.write("points.csv", dse::points_csv(result));
  out.write("pareto.csv", dse::points_csv(result, true));
  out.write("sweep.json", dump(dse::to_json(result)));
  out.finish();
  for (const auto& p : result.points)
    if (p.error) log << "explore: point " << p.id << " skipped: " << *p.error << '\n';
  log << "explore: " << result.points.size() << " points, " << result.front.front.size()
      << " on the front, " << result.front.excluded.size() << " excluded\n";
}

void cmd_calibrate(const CommonOptions& common, const CalibrateOptions& opts, std::ostream& log) {
  OutputDir out(common);
  if (common.config.empty()) throw Error(ErrorKind::validation, "--config: an anchors file is required");
  const std::string anchors_path = resolve_config_path(common.config);
  const auto anchors = cost::load_anchors(anchors_path);
  out.input("anchors", anchors_path);

  FrontEndSpec spec = reference_spec(4, PoolSpec::avg(2));
  HardwarePair seed = default_hardware();
  if (opts.spec) {
    const std::string path = resolve_config_path(*opts.spec);
    const Config cfg = load_config(path, ParseOptions{common.lenient});
    out.input("spec", path);
    spec = cfg.spec;
    seed = cfg.hardware;
  }
  cost::BackendLayers backend = cost::default_backend(spec);
  if (opts.backend) {
    const std::string path = resolve_config_path(*opts.backend);
    backend = cost::load_backend(path);
    out.input("backend", path);
  }

  const auto result = cost::calibrate(anchors, spec, backend, seed);
  out.write("params.json", dump(cost::to_json(result)));
  out.finish();
  log << "calibrate: bottleneck baseline=" << result.bottleneck_base
      << " p2m=" << result.bottleneck_p2m << '\n';
  for (const auto& [name, r] : result.residuals) log << "  residual " << name << " = " << r << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Processing-in-pixel front-end explorer", "p2m"};
  app.require_subcommand(1);
  app.set_version_flag("--version", P2M_VERSION);

  CommonOptions common;
  common.command_line = args;
  if (!common.command_line.empty()) common.command_line.front() = "p2m";
  std::string accounting;
  app.add_option("--config", common.config, "Input config (spec, sweep or anchors file)");
  app.add_option("--out", common.out, "Output directory");
  app.add_flag("--reproducible", common.reproducible, "Pin the manifest timestamp and output path");
  app.add_option("--accounting", accounting, "N_pix accounting, e.g. sens=conversions,com=transmitted");
  app.add_flag("--lenient", common.lenient, "Warn instead of failing on unknown config keys");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run the in-pixel front end on one frame");
  simulate->add_option("--image", sim.image, "Raw Bayer PGM")->required();
  simulate->add_option("--weights", sim.weights, "Quantized weights JSON")->required();
  simulate->add_option("--bn", sim.bn, "Batch-norm parameters JSON");
  simulate->add_option("--calibration-dir", sim.calibration_dir, "Directory of PGM frames for ADC range");
  simulate->add_option("--full-scale", sim.full_scale, "Explicit ADC full scale");

  ScheduleOptions sched;
  auto* schedule = app.add_subcommand("schedule", "Build and check the ADC activation schedule");
  schedule->add_option("--channel", sched.channel, "Output channel");
  schedule->add_option("--max-cycles", sched.max_cycles, "Trace cycles to write (negative: all)");

  CostOptions cost_opts;
  auto* cost_cmd = app.add_subcommand("cost", "Energy, delay and bandwidth report");
  cost_cmd->add_option("--backend", cost_opts.backend, "Back-end layer list JSON");
  cost_cmd->add_option("--params", cost_opts.params, "Calibrated params file");

  ExploreOptions explore_opts;
  auto* explore = app.add_subcommand("explore", "Enumerate a design space and extract the Pareto front");
  explore->add_option("--params", explore_opts.params, "Calibrated params file");
  explore->add_option("--accuracy", explore_opts.accuracy, "Accuracy table CSV");

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit per-op constants to published anchors");
  calibrate->add_option("--spec", cal.spec, "Front-end config to calibrate on");
  calibrate->add_option("--backend", cal.backend, "Back-end layer list JSON");

  for (auto* sub : {simulate, schedule, cost_cmd, explore, calibrate}) sub->fallthrough();

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!accounting.empty()) common.accounting = accounting;

  try {
    if (*simulate) cmd_simulate(common, sim, out);
    else if (*schedule) cmd_schedule(common, sched, out);
    else if (*cost_cmd) cmd_cost(common, cost_opts, out);
    else if (*explore) cmd_explore(common, explore_opts, out);
    else if (*calibrate) cmd_calibrate(common, cal, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace p2m::cli
