#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mpdse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = mpdse::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string data(const char* name) { return (fs::path(MPDSE_TEST_DATA_DIR) / name).string(); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mpdse_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out_dir(const char* sub = "") const { return (dir_ / sub).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PeDseWritesRankingWithBpSt1dWinners) {
  const auto r = run_cli({"--out", out_dir(), "pe-dse", "--wq", "1,2,4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir_ / "pe_ranking.csv");
  EXPECT_EQ(csv.rfind("# schema: pe_ranking v1", 0), 0u);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);  // header
  int winners = 0;
  while (std::getline(lines, line)) {
    // style,k,w_Q,rank,...
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    ASSERT_GE(f.size(), 4u);
    if (f[3] == "1") {
      ++winners;
      EXPECT_EQ(f[0], "BP-ST-1D") << line;
    }
  }
  EXPECT_EQ(winners, 3);
}

TEST_F(Cli, PeDseSingleStyleAndK) {
  const auto r =
      run_cli({"--out", out_dir(), "pe-dse", "--styles", "bp-st-1d", "--k", "2", "--wq", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(dir_ / "pe_ranking.csv"));
  int rows = 0;
  for (std::string line; std::getline(lines, line);) rows += !line.empty() && line[0] != '#';
  EXPECT_EQ(rows, 2);  // header plus one ranking row
}

TEST_F(Cli, MissingCalibrationKeyExitsTwoWithKey) {
  const auto r = run_cli({"--out", out_dir(), "--calib", data("bad_calibration.json"), "pe-dse",
                          "--k", "2", "--styles", "bp-st-1d"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("BP-ST-1D/k2"), std::string::npos) << r.err;
}

TEST_F(Cli, ExploreWritesArtifactsWithinThroughputBand) {
  const auto r = run_cli({"--out", out_dir(), "--format", "json", "explore", "--net", "resnet18",
                          "--wq", "2", "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"design.json", "mapping.csv", "report.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const auto report = json::parse(slurp(dir_ / "report.json"));
  EXPECT_NEAR(report["frames_per_s"].get<double>(), 245.23, 0.10 * 245.23);
}

TEST_F(Cli, ExplorePublishedK2DimsWithinThroughputBand) {
  const auto r = run_cli({"--out", out_dir(), "--format", "json", "explore", "--net", "resnet18",
                          "--wq", "2", "--k", "2", "--dims", "7,5,37"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out)["frames_per_s"].get<double>(), 245.23, 0.10 * 245.23);
}

TEST_F(Cli, ExploreK4EightBit) {
  const auto r = run_cli({"--out", out_dir(), "--format", "json", "explore", "--net", "resnet18",
                          "--wq", "8", "--k", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_NEAR(report["frames_per_s"].get<double>(), 97.25, 0.10 * 97.25);
}

TEST_F(Cli, ExploreIsByteStableAcrossRunsAndJobs) {
  const auto a = run_cli({"--out", out_dir("a"), "--jobs", "1", "explore", "--net",
                          data("toy_layer.json")});
  const auto b = run_cli({"--out", out_dir("b"), "--jobs", "4", "explore", "--net",
                          data("toy_layer.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"design.json", "mapping.csv", "report.json"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Cli, ExploreRejectsWqForFileNets) {
  const auto r = run_cli({"--out", out_dir(), "explore", "--net", data("toy_layer.json"), "--wq",
                          "4"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, InfeasibleConstraintsExitTwo) {
  const auto constraints = dir_ / "tiny.json";
  std::ofstream(constraints) << R"({"lut_budget": 10})";
  const auto r = run_cli({"--out", out_dir(), "--constraints", constraints.string(), "explore",
                          "--net", "resnet18", "--wq", "2"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, ReportReRendersSavedDesign) {
  ASSERT_EQ(run_cli({"--out", out_dir(), "--format", "json", "explore", "--net", "resnet50",
                     "--wq", "2", "--k", "2", "--dims", "7,5,37"})
                .code,
            0);
  const auto r = run_cli({"--out", out_dir(), "--format", "json", "report"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir_ / "report.json"));
}

TEST_F(Cli, SimulateExhaustivePasses) {
  const auto r = run_cli({"--out", out_dir(), "simulate", "--exhaustive", "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto summary = json::parse(slurp(dir_ / "simulate.json"));
  EXPECT_EQ(summary["mismatches"].get<int>(), 0);
  EXPECT_GT(summary["checks"].get<int>(), 0);
}

TEST_F(Cli, SimulateChannelwiseLayer) {
  const auto r = run_cli({"--out", out_dir(), "simulate", "--layer", data("channelwise.json"),
                          "--channelwise"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto without = run_cli({"--out", out_dir(), "simulate", "--layer",
                                data("channelwise.json")});
  EXPECT_EQ(without.code, 2);
}

TEST_F(Cli, SimulateOverflowIsAMismatch) {
  const auto constraints = dir_ / "narrow.json";
  std::ofstream(constraints) << R"({"accumulator_width": 16})";
  const auto r = run_cli({"--out", out_dir(), "--constraints", constraints.string(), "simulate",
                          "--styles", "bp-st-1d", "--wq", "8", "--length", "4608"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("first counterexample"), std::string::npos) << r.out;
}

TEST_F(Cli, SimulateRejectsNonDividingSlice) {
  const auto r = run_cli({"--out", out_dir(), "simulate", "--k", "3"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, FootprintEchoesPolicyAndReference) {
  const auto r = run_cli({"--out", out_dir(), "footprint", "--net", "resnet18", "--wq", "2",
                          "--baseline", "fp32"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("projection"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("4.9x"), std::string::npos) << r.out;
}

TEST_F(Cli, FootprintUnitsAgree) {
  const auto mbit = run_cli({"--format", "json", "footprint", "--net", "resnet152", "--wq", "2",
                             "--unit", "Mbit"});
  const auto mb = run_cli({"--format", "json", "footprint", "--net", "resnet152", "--wq", "2",
                           "--unit", "MB"});
  ASSERT_EQ(mbit.code, 0);
  ASSERT_EQ(mb.code, 0);
  const auto a = json::parse(mbit.out);
  const auto b = json::parse(mb.out);
  EXPECT_NEAR(a["quantized"].get<double>(), 8 * b["quantized"].get<double>(), 1e-9);
  EXPECT_DOUBLE_EQ(a["compression"].get<double>(), b["compression"].get<double>());
}

TEST_F(Cli, HelpOnEverySubcommandExitsZero) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"pe-dse", {"--wq", "--styles", "--k", "--n-bits"}},
      {"explore", {"--net", "--wq", "--k", "--styles", "--dims", "--batch"}},
      {"simulate", {"--exhaustive", "--layer", "--channelwise", "--k", "--vectors"}},
      {"footprint", {"--net", "--wq", "--baseline", "--unit", "--exclude-projections"}},
      {"report", {"--design"}}};
  for (const auto& [cmd, flags] : cases) {
    const auto r = run_cli({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
  const auto top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* f : {"--calib", "--constraints", "--out", "--format", "--jobs", "--seed"})
    EXPECT_NE(top.out.find(f), std::string::npos) << f;
}

TEST_F(Cli, UnknownFlagIsAConfigError) {
  EXPECT_EQ(run_cli({"pe-dse", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}
