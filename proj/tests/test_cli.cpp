#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "../tools/fcav_cli.hpp"

using namespace fcav;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream s(text);
  for (std::string l; std::getline(s, l);) out.push_back(l);
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fcav_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const std::vector<std::string> kSmallBudget = {"--pop-size", "300", "--sweeps", "10", "--eval-samples", "5000",
                                               "--pos-trials", "200", "--workers", "2"};

std::vector<std::string> with_budget(std::vector<std::string> args) {
  args.insert(args.end(), kSmallBudget.begin(), kSmallBudget.end());
  return args;
}

}  // namespace

TEST(Cli, CheckPassesForLdgm) {
  const CliRun r = invoke({"check", "--model", "ldgm", "--eta", "0.1", "--pos-trials", "300"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("PASS SYM  xi = 1"), std::string::npos) << r.out;
}

TEST(Cli, CheckFlagsAssortativeModel) {
  const CliRun r = invoke({"check", "--model", "assortative-sbm", "--beta", "1", "--pos-trials", "500"});
  EXPECT_EQ(r.code, cli::kExitViolation);
  EXPECT_NE(r.out.find("FAIL BAL"), std::string::npos) << r.out;
}

TEST(Cli, MiScanOverEta) {
  const CliRun r = invoke(with_budget({"mi-scan", "--model", "ldgm", "--grid", "eta=0.2,0.5", "--seed", "3"}));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);  // schema line, header, two rows
  EXPECT_EQ(ls[0], kCsvSchemaLine);
  EXPECT_EQ(ls[1].rfind("eta,mi,", 0), 0u);
  EXPECT_EQ(ls[3].rfind("0.5,0,", 0), 0u) << ls[3];
}

TEST(Cli, OutputIsDeterministicAcrossWorkerCounts) {
  std::vector<std::string> base = {"bethe", "--model", "sbm", "--beta", "2.5", "--pop-size", "300", "--sweeps", "10",
                                   "--eval-samples", "5000", "--seed", "9"};
  auto one = base, four = base;
  one.insert(one.end(), {"--workers", "1"});
  four.insert(four.end(), {"--workers", "4"});
  const CliRun a = invoke(one), b = invoke(four);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(csv_body(a.out), csv_body(b.out));
}

TEST(Cli, MiScanRefusesAssortativeModel) {
  const CliRun r = invoke(with_budget({"mi-scan", "--model", "assortative-sbm", "--beta", "1"}));
  EXPECT_EQ(r.code, cli::kExitViolation);
  const Json e = Json::parse(r.err);
  EXPECT_EQ(e["error"]["code"], "AssumptionViolation");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kExitError);
  EXPECT_EQ(invoke({"check", "--model", "nonsense"}).code, cli::kExitError);
  EXPECT_EQ(invoke({"mi-scan", "--model", "ldgm", "--grid", "eta"}).code, cli::kExitError);
  EXPECT_EQ(invoke({"check", "--config", scratch("missing.json").string()}).code, cli::kExitError);
}

TEST(Cli, ConfigFileAndManifest) {
  const auto cfg = scratch("threshold.json");
  const auto out = scratch("threshold_run");
  write_text(cfg.string(), Json{{"operation", "threshold"},
                                {"model", {{"model", "sbm"}, {"params", {{"q", 2}, {"d", 3}}}}},
                                {"grid", {{"param", "beta"}, {"values", {0.5, 3.0}}}},
                                {"seed", 5},
                                {"budget", {{"pop_size", 500}, {"sweeps", 30}, {"eval_samples", 20000}}},
                                {"output", out.string()}}
                               .dump());
  const CliRun r = invoke({"threshold", "--config", cfg.string(), "--workers", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json manifest = Json::parse(read_text(out.string() + ".manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["inputs"]["grid"]["values"], Json::array({0.5, 3.0}));
  ASSERT_TRUE(manifest["bracket"].is_array());
  EXPECT_EQ(manifest["bracket"][1], 3.0);
  const auto ls = lines(read_text(out.string() + ".csv"));
  EXPECT_EQ(ls.size(), 4u);

  // a config for another operation is refused
  EXPECT_EQ(invoke({"mi-scan", "--config", cfg.string()}).code, cli::kExitError);
}

TEST(Cli, SampleWritesAGraphThatReadsBack) {
  const auto out = scratch("sample");
  const CliRun r = invoke({"sample", "--model", "ldgm", "--eta", "0.1", "--n", "9", "--kind", "planted", "--theta", "2",
                     "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const FactorGraph g = graph_from_string(read_text(out.string() + ".graph"));
  EXPECT_EQ(g.n(), 9);
  EXPECT_EQ(g.pins().size(), 2u);
  const CliRun z = invoke({"exact", "--model", "ldgm", "--eta", "0.1", "--graph", out.string() + ".graph"});
  EXPECT_EQ(z.code, 0) << z.err;
  EXPECT_NE(z.out.find("log_z"), std::string::npos) << z.out;
}

TEST(Cli, SelftestReportsInjectedCorruption) {
  const CliRun r = invoke({"selftest", "--inject-corruption", "--only", "3", "--no-determinism"});
  EXPECT_EQ(r.code, cli::kExitViolation);
  EXPECT_NE(r.out.find("[FAIL] [PRIMARY] 3."), std::string::npos) << r.out;
  const CliRun clean = invoke({"selftest", "--only", "3", "--no-determinism"});
  EXPECT_EQ(clean.code, 0) << clean.out;
}
