#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pata/suites.hpp"

using namespace pata;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(PATA_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Suites, SeedsDependOnNameAndMaster) {
  EXPECT_EQ(suite_seed(7, "prop1"), suite_seed(7, "prop1"));
  EXPECT_NE(suite_seed(7, "prop1"), suite_seed(7, "prop2"));
  EXPECT_NE(suite_seed(7, "prop1"), suite_seed(8, "prop1"));
}

TEST(Suites, Prop1HasThreePassingRows) {
  SuiteOptions o;
  o.seed = 7;
  const auto rows = run_suite("prop1", o);
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass) << r.id;
    EXPECT_EQ(r.probes, 30);
  }
}

TEST(Suites, UnknownNameThrows) { EXPECT_THROW(run_suite("lemma9", SuiteOptions{}), std::invalid_argument); }

TEST(Suites, ReportIsDeterministicWithoutWallTime) {
  SuiteOptions o;
  o.seed = 11;
  o.n = 3;
  o.k = 2;
  Report a, b;
  a.command = b.command = "verify";
  a.seed = b.seed = o.seed;
  for (const char* s : {"lemma2", "structural", "eq16"}) {
    for (auto& r : run_suite(s, o)) a.rows.push_back(r);
    for (auto& r : run_suite(s, o)) b.rows.push_back(r);
  }
  EXPECT_EQ(report_json(a, false).dump(), report_json(b, false).dump());
  EXPECT_EQ(report_csv(a, false), report_csv(b, false));
  EXPECT_EQ(report_json(a, false).dump().find("wall_ms"), std::string::npos);
}

TEST(Suites, ReportJsonRoundTrip) {
  Report r;
  r.command = "verify";
  r.seed = 3;
  CheckRow row;
  row.suite = "s";
  row.id = "x, \"quoted\"";
  row.formula = "a = b";
  row.pass = false;
  row.residual = 0.125;
  row.tolerance = 1e-9;
  row.probes = 4;
  row.expected = 2.0;
  row.computed = 1.0;
  row.note = "n";
  r.rows.push_back(row);
  const json j = report_json(r);
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_FALSE(j["all_pass"].get<bool>());
  const Report back = report_from_json(j);
  ASSERT_EQ(back.rows.size(), 1U);
  EXPECT_EQ(back.rows[0].id, row.id);
  EXPECT_EQ(*back.rows[0].computed, 1.0);
  EXPECT_EQ(report_json(back).dump(), j.dump());
  // CSV quotes the comma and doubles the quotes
  EXPECT_NE(report_csv(r).find("\"x, \"\"quoted\"\"\""), std::string::npos);
  EXPECT_EQ(report_csv(r).rfind("schema_version,", 0), 0U);
}

TEST(Suites, SimulationSetupRejectsUnknownKeys) {
  const auto sys = scalar_field_system(minkowski_metric(2), "0.5*y1^2", 1);
  EXPECT_THROW(simulation_setup(sys, json{{"dt", 0.1}}, 64, Gauge::None), std::invalid_argument);
  const auto s = simulation_setup(sys, json{{"exact", "cos(sqrt(5)*x1)*cos(2*x2)"}, {"X", 6.283185307179586}}, 64,
                                  Gauge::None);
  EXPECT_EQ(s.grid.nx, 64);
  EXPECT_EQ(s.grid.nt % 4, 0);
  EXPECT_LE(s.grid.ht() / s.grid.hx(), 0.5 + 1e-12);
}

TEST(Suites, SingularStringProbeReportsFailure) {
  const System str = build_system("string", json::parse(R"({"k": 2, "metric": "euclidean"})"));
  const auto rows = legendre_rows(str, 5, 4, true);
  ASSERT_FALSE(rows.empty());
  EXPECT_FALSE(rows.back().pass);
  EXPECT_NE(rows.back().note.find("SingularHessian"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "pata_cli_test";
  std::filesystem::remove_all(dir);
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli("verify --suite prop1 --seed 7" + out), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  EXPECT_EQ(run_cli("report" + out), 0);
  EXPECT_EQ(run_cli("verify --suite \"\"" + out), 2);
  EXPECT_EQ(run_cli("verify" + out), 2);
  EXPECT_EQ(run_cli("verify --suite nope" + out), 2);
  EXPECT_EQ(run_cli("verify --gauge h1 --suite prop1" + out), 2);
  EXPECT_EQ(run_cli("verify --config /nonexistent.json --suite prop1" + out), 2);
  // a failing row: {π,A} at n = 3
  EXPECT_EQ(run_cli("verify --suite maxwell_bracket --n 3" + out), 1);
  EXPECT_EQ(run_cli("report" + out), 1);
  // flags win over the config
  std::ofstream(dir / "cfg.json") << R"({"suites": ["maxwell_bracket"], "seed": 7})";
  EXPECT_EQ(run_cli("verify --config " + (dir / "cfg.json").string() + " --suite prop1" + out), 0);
  EXPECT_NE(slurp(dir / "report.csv").find("prop1"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SimulateWritesSolution) {
  const auto dir = std::filesystem::temp_directory_path() / "pata_cli_sim";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"system": "scalar_field", "params": {"potential": "0", "metric": "minkowski"},
    "simulation": {"X": 6.283185307179586, "T": 1.0, "initial": {"y": ["0.7"]}}})";
  EXPECT_EQ(run_cli("simulate --mesh 32 --gauge h0 --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 0);
  const std::string csv = slurp(dir / "solution.csv");
  EXPECT_EQ(csv.rfind("t,x,y1,p0_1,p1_1,eps,H,S00,position_residual,momentum_residual\n", 0), 0U);
  std::filesystem::remove_all(dir);
}
