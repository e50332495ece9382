#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mfbounds/cli.hpp"
#include "mfbounds/error.hpp"

using namespace mfb;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mfb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& j) {
    const auto p = dir_ / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mfbounds");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  }

  json read(const std::string& name) {
    std::ifstream in(dir_ / "out" / name);
    return json::parse(in);
  }

  static json base() {
    return json{{"schema_version", 1},
                {"seed", 11},
                {"market", {{"s0", 10}, {"sigma", {0.3, 0.4}}, {"rho_offdiag", 0.5}, {"maturity", 1.5}}},
                {"target", {{"payoff", "(max(x1, x2) - {K})^+"}, {"strikes", {6}}}},
                {"trainer", {{"iterations", 60}, {"hidden_layers", 1}, {"width", 8}, {"eval_samples", 2048}, {"slack_samples", 512}}},
                {"pricing", {{"samples", 20000}}},
                {"oracle", {{"grid", {12, 12}}, {"coupling_samples", 50000}}}};
  }

  std::string out() const { return (dir_ / "out").string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateWithNoConstraintsWritesEmptyTable) {
  const auto cfg = write_config(base());
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", out()}), 0);
  const auto doc = read("instruments.json");
  EXPECT_TRUE(doc.at("instruments").empty());
  EXPECT_EQ(doc.at("targets").size(), 1u);
  EXPECT_EQ(doc.at("config").at("seed"), 11);
}

TEST_F(CliTest, GeneratePricesOneInstrumentPerStrike) {
  auto j = base();
  j["constraints"] = json::array({{{"payoff", "(max(x1, x2) - {K})^+"}, {"strikes", {6, 9}}}});
  const auto cfg = write_config(j);
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", out()}), 0);
  const auto doc = read("instruments.json");
  ASSERT_EQ(doc.at("instruments").size(), 2u);
  EXPECT_EQ(doc.at("instruments")[0].at("payoff"), "(max(x1, x2) - 6)^+");
  EXPECT_GT(doc.at("instruments")[0].at("stderr").get<double>(), 0.0);
  // the echoed config reproduces the run
  const auto echoed = config_from_json(doc.at("config"));
  EXPECT_EQ(to_json(echoed), doc.at("config"));
}

TEST_F(CliTest, MalformedPayoffExitsWithParseCode) {
  auto j = base();
  j["constraints"] = json::array({{{"payoff", "(max(x1, x2) - "}}});
  const auto cfg = write_config(j);
  EXPECT_EQ(run({"generate", "--config", cfg.string(), "--out", out()}), 3);
}

TEST_F(CliTest, UnknownKeysAreRejected) {
  auto j = base();
  j["trainr"] = json::object();
  EXPECT_EQ(run({"generate", "--config", write_config(j).string(), "--out", out()}), 2);
  j = base();
  j["trainer"]["gama"] = 3;
  EXPECT_EQ(run({"generate", "--config", write_config(j).string(), "--out", out()}), 2);
  j = base();
  j["schema_version"] = 99;
  EXPECT_EQ(run({"generate", "--config", write_config(j).string(), "--out", out()}), 2);
}

TEST_F(CliTest, BoundLowerOnlyOmitsUpper) {
  const auto cfg = write_config(base());
  ASSERT_EQ(run({"bound", "--config", cfg.string(), "--out", out(), "--direction", "lower"}), 0);
  const auto doc = read("result.json");
  ASSERT_EQ(doc.at("results").size(), 1u);
  EXPECT_FALSE(doc.at("results")[0].contains("upper"));
  EXPECT_TRUE(doc.at("results")[0].contains("lower"));
  EXPECT_TRUE(doc.at("results")[0].at("lower").contains("slack"));
  EXPECT_EQ(doc.at("results")[0].at("lower").at("trace").size(), 60u);
}

TEST_F(CliTest, BoundIsReproducibleFromEchoedConfig) {
  const auto cfg = write_config(base());
  ASSERT_EQ(run({"bound", "--config", cfg.string(), "--out", out(), "--direction", "upper", "--threads", "1"}), 0);
  const auto first = read("result.json");
  const auto echoed = dir_ / "echoed.json";
  std::ofstream(echoed) << first.at("config").dump();
  ASSERT_EQ(run({"bound", "--config", echoed.string(), "--out", out(), "--direction", "upper"}), 0);
  const auto second = read("result.json");
  for (const char* key : {"bound", "trace", "b_values", "slack"}) {
    EXPECT_EQ(second.at("results")[0].at("upper").at(key), first.at("results")[0].at("upper").at(key)) << key;
  }
}

TEST_F(CliTest, VerifyWritesReportAndGap) {
  auto j = base();
  j["reference"] = "discrete";
  j["pricing"]["measure"] = "discrete";
  j["constraints"] = json::array({{{"payoff", "(avg(x1, x2) - {K})^+"}, {"strikes", {10}}}});
  const auto cfg = write_config(j);
  ASSERT_EQ(run({"bound", "--config", cfg.string(), "--out", out(), "--direction", "upper"}), 0);
  ASSERT_EQ(run({"verify", "--config", cfg.string(), "--out", out(), "--bound-result", out() + "/result.json"}), 0);
  const auto doc = read("lp_report.json");
  EXPECT_TRUE(doc.at("feasibility").at("feasible").get<bool>());
  const auto& t = doc.at("targets")[0];
  EXPECT_TRUE(t.contains("relative_gap_upper"));
  EXPECT_GE(t.at("max").at("optimum").get<double>(), t.at("min").at("optimum").get<double>());
}

TEST_F(CliTest, VerifyInflatedPriceIsInfeasible) {
  const auto cfg = write_config(base());
  const auto inst = dir_ / "instruments.json";
  std::ofstream(inst) << json{{"instruments", json::array({{{"payoff", "(max(x1, x2) - 10)^+"}, {"price", 50.0}, {"stderr", 0.0}, {"measure", "discrete"}}})}}.dump();
  EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", out(), "--instruments", inst.string()}), 5);
  const auto doc = read("lp_report.json");
  EXPECT_FALSE(doc.at("feasibility").at("feasible").get<bool>());
  EXPECT_EQ(doc.at("feasibility").at("certificate").at("kind"), "uniform_strong_arbitrage");
}

TEST_F(CliTest, VerifyRefusesLargeDimension) {
  auto j = base();
  j["market"] = {{"s0", 10}, {"sigma", {0.3, 0.4, 0.5, 0.35, 0.45, 0.55}}, {"rho_offdiag", 0.4}, {"maturity", 1.5}};
  j["target"] = {{"payoff", "(avg(x1, x2, x3, x4, x5, x6) - 10)^+"}};
  j.erase("oracle");
  EXPECT_EQ(run({"verify", "--config", write_config(j).string(), "--out", out()}), 6);
}

TEST_F(CliTest, BadArgumentsExitTwo) {
  const auto cfg = write_config(base());
  EXPECT_EQ(run({"bound", "--config", cfg.string(), "--direction", "sideways"}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"bound", "--config", (dir_ / "missing.json").string()}), 2);
}

TEST_F(CliTest, SweepConvergenceTimingWriteCsv) {
  auto j = base();
  j["target"]["strikes"] = {6, 8};
  j["experiment"] = {{"cases",
                      json::array({{{"name", "base"}},
                                   {{"name", "plus"},
                                    {"extends", "base"},
                                    {"constraints", json::array({{{"payoff", "(max(x1, x2) - {K})^+"}, {"strikes", {7}}}})}}})}};
  j["timing"] = {{"dims", {1, 2}}, {"iterations", 20}};
  const auto cfg = write_config(j);
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--out", out(), "--direction", "upper"}), 0);
  std::ifstream sweep(dir_ / "out" / "sweep.csv");
  std::string header;
  std::getline(sweep, header);
  EXPECT_EQ(header, "strike,reference,stderr,upper_base,upper_plus");
  EXPECT_EQ(read("manifest.json").at("cases").size(), 2u);
  ASSERT_EQ(run({"convergence", "--config", cfg.string(), "--out", out()}), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "convergence.csv"));
  ASSERT_EQ(run({"timing", "--config", cfg.string(), "--out", out()}), 0);
  EXPECT_EQ(read("manifest.json").at("rows").size(), 2u);
}

TEST(Config, RoundTripAndBundles) {
  const json j{{"schema_version", 1},
               {"seed", 3},
               {"experiment", {{"bundle", "E1"}}},
               {"trainer", {{"iterations", 10}}}};
  const auto c = config_from_json(j);
  EXPECT_EQ(c.trainer.iterations, 10);
  EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
  const auto b = resolve_experiment(c);
  EXPECT_EQ(b.cases.size(), 5u);
  EXPECT_EQ(b.cases[0].trainer.iterations, 10);
  EXPECT_THROW(config_from_json(json{{"trainer", {{"seed", 4}}}}), Error);
  EXPECT_THROW(config_from_json(json{{"experiment", {{"bundle", "E1"}, {"cases", json::array()}, {"extra", 1}}}}), Error);
  EXPECT_EQ(direction_choice_from_string("both"), DirectionChoice::Both);
}
