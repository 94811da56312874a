#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ehrelay/cli.hpp"

using namespace ehrelay;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = EHRELAY_TEST_DATA;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ehrelay");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ehrelay_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
  }

  static std::vector<std::vector<std::string>> csv(const std::string& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      rows.push_back(cells);
    }
    return rows;
  }

  fs::path dir_;
};

std::string data(const std::string& name) { return kData + "/" + name; }

}  // namespace

TEST_F(CliTest, SolveDispatchesProportionalCase) {
  const auto r = run({"solve", data("staircase.json"), "--out", path("a")});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  const json doc = json::parse(slurp(path("a/schedule.json")));
  EXPECT_EQ(doc["method"], "proportional");
  ASSERT_EQ(doc["schedule"].size(), 3u);
  const double want[] = {1.0, 2.5, 2.5};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(doc["schedule"][i]["p1"].get<double>(), want[i], 1e-12);
    EXPECT_NEAR(doc["schedule"][i]["p2"].get<double>(), want[i] / 2, 1e-12);
    EXPECT_EQ(doc["schedule"][i]["epoch"], i + 1);
  }
  EXPECT_EQ(doc["manifest"]["version"], kVersion);
  EXPECT_EQ(doc["units"]["power"], "W");

  const auto g = run({"solve", data("staircase.json"), "--case", "general", "--out", path("b")});
  ASSERT_EQ(g.code, kExitOk) << g.out;
  const json gen = json::parse(slurp(path("b/schedule.json")));
  EXPECT_EQ(gen["method"], "general");
  EXPECT_NEAR(gen["total_bits"].get<double>(), doc["total_bits"].get<double>(), 1e-4);
  EXPECT_LE(gen["kkt_residual"].get<double>(), 1e-7);
}

TEST_F(CliTest, SolveSingleHarvesterCases) {
  const auto r = run({"solve", data("single.json"), "--out", path("s")});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(json::parse(slurp(path("s/schedule.json")))["method"], "proportional");
  const auto g = run({"solve", data("general.json"), "--out", path("g")});
  ASSERT_EQ(g.code, kExitOk) << g.out;
  EXPECT_EQ(json::parse(slurp(path("g/schedule.json")))["method"], "general");
}

TEST_F(CliTest, ParseErrorNamesTheField) {
  const auto r = run({"solve", data("malformed.json"), "--out", path("m")});
  EXPECT_EQ(r.code, kExitParse);
  EXPECT_NE(r.err.find("channel.b"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("m/schedule.json")));
}

TEST_F(CliTest, ValidationAndBudgetErrors) {
  const auto late = run({"solve", data("late_start.json"), "--out", path("l")});
  EXPECT_EQ(late.code, kExitValidation);
  EXPECT_NE(late.err.find("t=0"), std::string::npos) << late.err;
  const auto big = run({"oracle", data("k3.json"), "--out", path("o")});
  EXPECT_EQ(big.code, kExitValidation);
  EXPECT_NE(big.err.find("budget"), std::string::npos) << big.err;
  EXPECT_EQ(run({"solve", data("missing.json")}).code, kExitParse);
  EXPECT_EQ(run({"solve"}).code, kExitParse);
  EXPECT_EQ(run({"solve", data("staircase.json"), "--tol-inner", "-1"}).code, kExitParse);
  EXPECT_EQ(run({"solve", data("staircase.json"), "--case", "bogus"}).code, kExitParse);
}

TEST_F(CliTest, OracleWritesBestSchedule) {
  const auto r = run({"oracle", data("single.json"), "--grid", "10", "--out", path("o")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json doc = json::parse(slurp(path("o/oracle.json")));
  EXPECT_NEAR(doc["p1"][0].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(doc["p2"][0].get<double>(), 2.0, 1e-12);
  EXPECT_GE(doc["slack_bits"].get<double>(), 0.0);
}

TEST_F(CliTest, CheckAcceptsSolverOutput) {
  for (const char* f : {"staircase.json", "single.json"}) {
    const auto s = run({"solve", data(f), "--out", path(f)});
    ASSERT_EQ(s.code, kExitOk) << f << s.out;
    const auto c = run({"check", data(f), path(std::string(f) + "/schedule.json")});
    EXPECT_EQ(c.code, kExitOk) << f << "\n" << c.out;
    EXPECT_EQ(c.out.find("FAIL"), std::string::npos) << c.out;
  }
}

// On these profiles the certified optimum raises the source power while
// source energy is still banked: relay energy arriving later makes a higher
// source power worth more. Only the source tightness line may fail.
TEST_F(CliTest, CheckFlagsSlackSourceChangesOnGeneralProfiles) {
  for (const char* f : {"general.json", "k3.json"}) {
    const auto s = run({"solve", data(f), "--out", path(f)});
    ASSERT_EQ(s.code, kExitOk) << f << s.out;
    const auto c = run({"check", data(f), path(std::string(f) + "/schedule.json")});
    EXPECT_EQ(c.code, kExitCheckFailed) << c.out;
    EXPECT_NE(c.out.find("FAIL tight_at_changes_source"), std::string::npos) << c.out;
    for (const char* ok : {"feasibility", "monotonicity_p1", "monotonicity_p2",
                           "tight_at_changes_relay", "recomputed_rates"}) {
      EXPECT_NE(c.out.find(std::string("PASS ") + ok), std::string::npos) << f << " " << ok;
    }
  }
}

TEST_F(CliTest, CheckRejectsBrokenSchedules) {
  ASSERT_EQ(run({"solve", data("staircase.json"), "--out", path("x")}).code, kExitOk);
  const json good = json::parse(slurp(path("x/schedule.json")));
  auto write = [&](const json& j, const std::string& name) {
    std::ofstream(path(name)) << j.dump(2);
    return path(name);
  };

  json dec = good;
  dec["schedule"][2]["p1"] = 2.4;
  dec["schedule"][2]["rate_bits"] = 0.0;
  auto r = run({"check", data("staircase.json"), write(dec, "dec.json")});
  EXPECT_EQ(r.code, kExitCheckFailed);
  EXPECT_NE(r.out.find("FAIL monotonicity_p1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("FAIL recomputed_rates"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS feasibility"), std::string::npos) << r.out;

  json over = good;
  over["schedule"][0]["p1"] = 1.5;
  r = run({"check", data("staircase.json"), write(over, "over.json")});
  EXPECT_EQ(r.code, kExitCheckFailed);
  EXPECT_NE(r.out.find("FAIL feasibility"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("prefix 1"), std::string::npos) << r.out;

  json shortened = good;
  shortened["schedule"].erase(2);
  r = run({"check", data("staircase.json"), write(shortened, "short.json")});
  EXPECT_EQ(r.code, kExitValidation);
}

TEST_F(CliTest, PlotdataCurves) {
  ASSERT_EQ(run({"plotdata", data("staircase.json"), "--out", path("p")}).code, kExitOk);
  const auto c = csv(path("p/consumed.csv"));
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(c[0][0], "t_s");
  // Consumption meets the pre-event harvest at t = 2 where the power rises.
  EXPECT_EQ(std::stod(c[2][0]), 2.0);
  EXPECT_NEAR(std::stod(c[2][1]), 2.0, 1e-9);
  EXPECT_NEAR(std::stod(c[4][1]), 12.0, 1e-9);
  const auto h = csv(path("p/harvested.csv"));
  EXPECT_EQ(h.size(), 1u + 2 * 3 + 1);
  EXPECT_EQ(csv(path("p/steps.csv"))[1].size(), 8u);

  ASSERT_EQ(run({"plotdata", data("single.json"), "--out", path("q")}).code, kExitOk);
  const auto chord = csv(path("q/consumed.csv"));
  ASSERT_EQ(chord.size(), 3u);
  EXPECT_NEAR(std::stod(chord[2][1]), 6.0, 1e-9);
  EXPECT_NEAR(std::stod(chord[2][2]), 12.0, 1e-9);

  ASSERT_EQ(run({"plotdata", data("zero.json"), "--out", path("z")}).code, kExitOk);
  for (const auto& row : csv(path("z/consumed.csv"))) {
    if (row[0] == "t_s") continue;
    EXPECT_EQ(std::stod(row[1]), 0.0);
    EXPECT_EQ(std::stod(row[2]), 0.0);
  }
}

TEST_F(CliTest, SolveIsDeterministic) {
  auto once = [&] {
    EXPECT_EQ(run({"solve", data("general.json"), "--seed", "3", "--out", path("d")}).code, kExitOk);
    std::string text = slurp(path("d/schedule.json"));
    const auto at = text.find("\"duration_s\"");
    EXPECT_NE(at, std::string::npos);
    return text.erase(at, text.find('\n', at) - at);
  };
  const std::string first = once();
  EXPECT_EQ(first, once());
}

TEST_F(CliTest, VersionFlag) {
  const auto r = run({"--version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);
}
