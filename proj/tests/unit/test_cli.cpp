#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2m/cli/commands.hpp"
#include "p2m/cli/manifest.hpp"
#include "support.hpp"

namespace p2m::cli {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "p2m");
  std::ostringstream out, err;
  Outcome o;
  o.code = run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string data(const std::string& rel) { return test::data_path(rel); }
std::string fixture(const std::string& rel) { return test::fixture_path(rel); }

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(test::read_file(path)); }

std::vector<std::string> simulate_args(const std::string& out) {
  return {"simulate", "--config", data("configs/small_64x48.json"), "--image", fixture("frame_64x48.pgm"),
          "--weights", fixture("weights_k7_c16.json"), "--bn", fixture("bn_c16.json"), "--out", out};
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(exit_code(ErrorKind::parse), 2);
  EXPECT_EQ(exit_code(ErrorKind::validation), 2);
  EXPECT_EQ(exit_code(ErrorKind::shape), 2);
  EXPECT_EQ(exit_code(ErrorKind::not_found), 2);
  EXPECT_EQ(exit_code(ErrorKind::unsupported), 2);
  EXPECT_EQ(exit_code(ErrorKind::numeric_domain), 2);
  EXPECT_EQ(exit_code(ErrorKind::infeasible), 3);
  EXPECT_EQ(exit_code(ErrorKind::calibration), 3);
  EXPECT_EQ(exit_code(ErrorKind::io), 4);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"schedule", "--channel", "x"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  const Outcome no_out = invoke({"cost", "--config", data("configs/reference_s2_max2.json")});
  EXPECT_EQ(no_out.code, 2);
  EXPECT_NE(no_out.err.find("--out"), std::string::npos);
}

TEST(Cli, SimulateWritesMapsAndSummary) {
  const std::string dir = test::scratch_dir("cli_sim");
  const Outcome o = invoke(simulate_args(dir));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto summary = read_json(dir + "/summary.json");
  EXPECT_EQ(summary["output"]["channels"], 16);
  EXPECT_EQ(summary["output"]["height"], 6);
  EXPECT_EQ(summary["output"]["width"], 8);
  EXPECT_EQ(summary["transmitted_values"], 16 * 6 * 8);
  EXPECT_EQ(summary["adc"]["source"], "analytic");
  const auto manifest = read_json(dir + "/manifest.json");
  const auto outputs = manifest["outputs"].get<std::vector<std::string>>();
  EXPECT_TRUE(std::is_sorted(outputs.begin(), outputs.end()));
  EXPECT_NE(std::find(outputs.begin(), outputs.end(), "summary.json"), outputs.end());
  EXPECT_EQ(manifest["inputs"].size(), 4u);
  for (const auto& in : manifest["inputs"])
    EXPECT_EQ(in["sha256"], sha256_hex(test::read_file(in["path"].get<std::string>())));
}

TEST(Cli, SimulateErrors) {
  const std::string dir = test::scratch_dir("cli_sim_err");
  auto args = simulate_args(dir);
  args[6] = "/nonexistent/weights.json";
  const Outcome missing = invoke(args);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("weights"), std::string::npos);
  EXPECT_NE(missing.err.find("not found"), std::string::npos);

  args = simulate_args(dir);
  args[2] = data("configs/reference_s2_max2.json");  // frame is 64x48
  EXPECT_EQ(invoke(args).code, 2);

  args = simulate_args(dir);
  args.insert(args.end(), {"--full-scale", "-1"});
  EXPECT_EQ(invoke(args).code, 2);
}

TEST(Cli, ScheduleToyAndInvalidChannel) {
  const std::string dir = test::scratch_dir("cli_sched");
  const Outcome o = invoke({"schedule", "--config", data("configs/toy_5x5_k2.json"), "--out", dir, "--max-cycles", "-1"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(read_json(dir + "/summary.json")["cycles"], 6);
  const std::string trace = test::read_file(dir + "/trace.jsonl");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 6);

  const std::string capped = test::scratch_dir("cli_sched_cap");
  ASSERT_EQ(invoke({"schedule", "--config", data("configs/reference_s2_max2.json"), "--out", capped}).code, 0);
  const std::string t2 = test::read_file(capped + "/trace.jsonl");
  EXPECT_EQ(std::count(t2.begin(), t2.end(), '\n'), 32);

  EXPECT_EQ(invoke({"schedule", "--config", data("configs/toy_5x5_k2.json"), "--out", dir, "--channel", "3"}).code, 2);
}

TEST(Cli, CostReportAndCsv) {
  const std::string dir = test::scratch_dir("cli_cost");
  const Outcome o = invoke({"cost", "--config", data("configs/reference_s4_avg2.json"), "--out", dir});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = read_json(dir + "/cost.json");
  EXPECT_EQ(j["cost_vector"]["p2m"]["br"], 24.0);
  EXPECT_EQ(j["cost_vector"]["p2m"]["n_t"], 64);
  EXPECT_TRUE(j.contains("errata_notes"));
  EXPECT_TRUE(j.contains("hardware"));
  const std::string csv = test::read_file(dir + "/cost.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  const Outcome bad = invoke({"cost", "--config", data("configs/reference_s4_avg2.json"), "--out", dir,
                              "--accounting", "sens=nonsense"});
  EXPECT_EQ(bad.code, 2);
}

TEST(Cli, CostCsvShowsDashForUndefinedRatio) {
  const std::string dir = test::scratch_dir("cli_cost_dash");
  const std::string cfg = dir + "/zero_mac.json";
  std::ofstream(cfg) << R"({
    "sensor": {"width": 1280, "height": 720},
    "conv": {"kernel": 7, "stride": 2, "padding": 3, "out_channels": 16},
    "pool": {"kind": "max", "kernel": 3, "stride": 2, "padding": 1},
    "activation_bits": 8,
    "hardware_p2m": {"e_com": 0.0}
  })";
  const std::string out = dir + "/out";
  const Outcome o = invoke({"cost", "--config", cfg, "--out", out});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(test::read_file(out + "/cost.csv").find("\xE2\x80\x94"), std::string::npos);
}

TEST(Cli, CalibrateThenCostWithParams) {
  const std::string dir = test::scratch_dir("cli_cal");
  ASSERT_EQ(invoke({"calibrate", "--config", data("anchors/published_anchors.json"), "--out", dir}).code, 0);
  const auto params = read_json(dir + "/params.json");
  EXPECT_LT(params["max_residual"].get<double>(), 0.05);
  const std::string cost_dir = dir + "/cost";
  const Outcome o = invoke({"cost", "--config", data("configs/reference_s4_avg2.json"), "--out", cost_dir,
                            "--params", dir + "/params.json"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = read_json(cost_dir + "/cost.json");
  EXPECT_NEAR(j["cost_vector"]["p2m"]["fps"].get<double>(), 17.0, 17.0 * 0.05);
  EXPECT_NEAR(j["cost_vector"]["baseline"]["fps"].get<double>(), 9.6, 9.6 * 0.05);
}

TEST(Cli, CalibrateInfeasibleExitsThree) {
  const std::string dir = test::scratch_dir("cli_cal_bad");
  auto anchors = read_json(data("anchors/published_anchors.json"));
  anchors["total_latency_ratio"] = 10.0;
  std::ofstream(dir + "/anchors.json") << anchors.dump();
  const Outcome o = invoke({"calibrate", "--config", dir + "/anchors.json", "--out", dir + "/out"});
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("calibration"), std::string::npos);
}

TEST(Cli, ExploreWritesFront) {
  const std::string dir = test::scratch_dir("cli_explore");
  const Outcome o = invoke({"explore", "--config", data("sweeps/published_sweep.json"), "--out", dir,
                            "--accuracy", data("accuracy.csv")});
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string pareto = test::read_file(dir + "/pareto.csv");
  EXPECT_EQ(std::count(pareto.begin(), pareto.end(), '\n'), 4);
  EXPECT_EQ(invoke({"explore", "--config", data("sweeps/empty_sweep.json"), "--out", dir + "/e"}).code, 0);
}

TEST(Cli, ReproducibleRunsAreByteIdentical) {
  const std::string a = test::scratch_dir("cli_repro_a");
  const std::string b = test::scratch_dir("cli_repro_b");
  auto args_a = simulate_args(a);
  auto args_b = simulate_args(b);
  args_a.push_back("--reproducible");
  args_b.push_back("--reproducible");
  ASSERT_EQ(invoke(args_a).code, 0);
  ASSERT_EQ(invoke(args_b).code, 0);
  EXPECT_EQ(test::dir_contents(a), test::dir_contents(b));
  const auto manifest = read_json(a + "/manifest.json");
  EXPECT_EQ(manifest["timestamp"], "1970-01-01T00:00:00Z");
  const auto cl = manifest["command_line"].get<std::vector<std::string>>();
  EXPECT_EQ(cl.front(), "p2m");
  EXPECT_NE(std::find(cl.begin(), cl.end(), "$OUT"), cl.end());
}

TEST(Cli, ConfigDirResolvesRelativePaths) {
  const std::string dir = test::scratch_dir("cli_cfgdir");
  ::setenv("P2M_CONFIG_DIR", data("configs").c_str(), 1);
  const Outcome o = invoke({"schedule", "--config", "toy_5x5_k2.json", "--out", dir});
  ::unsetenv("P2M_CONFIG_DIR");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(read_json(dir + "/summary.json")["cycles"], 6);
  EXPECT_EQ(invoke({"schedule", "--config", "toy_5x5_k2.json", "--out", dir}).code, 2);
}

TEST(Cli, Sha256KnownValue) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace p2m::cli
