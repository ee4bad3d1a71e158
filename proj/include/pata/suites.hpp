// Named verification suites, report rows and their JSON / CSV forms. The CLI
// and the acceptance binary are thin layers over this.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pata/dynamics.hpp"
#include "pata/systems.hpp"

namespace pata {

inline constexpr int kSchemaVersion = 1;

struct CheckRow {
  std::string suite;
  std::string id;
  std::string formula;  // reference identity, plain text
  bool pass = false;
  double residual = 0.0;
  double tolerance = 0.0;
  int probes = 0;
  double wall_ms = 0.0;
  std::optional<double> expected, computed;
  std::string note;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int n = 2;
  int k = 1;
  int probes = 30;
  int mesh = 256;  // finest of three meshes for refinement studies
  Gauge gauge = Gauge::None;
};

const std::vector<std::string>& suite_names();
// Per-suite seed from the master seed and the suite name.
std::uint64_t suite_seed(std::uint64_t master, const std::string& name);
// Throws std::invalid_argument for an unknown name.
std::vector<CheckRow> run_suite(const std::string& name, const SuiteOptions& opt);

struct Report {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<CheckRow> rows;
  bool all_pass() const;
};

nlohmann::json report_json(const Report& r, bool wall_time = true);
Report report_from_json(const nlohmann::json& j);
std::string report_csv(const Report& r, bool wall_time = true);
// One line per row for terminals.
std::string report_text(const Report& r);

// Legendre rows for a configured system: round trip, envelope gradients and,
// for the string, a probe with singular M when singular_probe is set.
std::vector<CheckRow> legendre_rows(const System& system, std::uint64_t seed, int probes, bool singular_probe = false);

// Maxwell rows for a configured system: {π,A} (when with_bracket), gauge
// generator brackets and a manufactured solution.
std::vector<CheckRow> maxwell_rows(const MaxwellSystem& system, std::uint64_t seed, int probes,
                                   bool with_bracket = true);

// Time integration of a configured scalar field.
struct SimulationSetup {
  Grid grid;
  Gauge gauge = Gauge::None;
  InitialData init;
  std::optional<Expr> exact;  // analytic field for a convergence table
  bool checks = true;         // Stokes and slice rows
};
// Reads {"T","X","nt","nx","initial":{"y":[..],"p0":[..]},"exact","checks"};
// expressions use x1 (time), x2, y1.. names. nx defaults to mesh, nt to
// keep c ht/hx = 1/2.
SimulationSetup simulation_setup(const ScalarFieldSystem& system, const nlohmann::json& block, int mesh, Gauge gauge);

struct SimulationResult {
  FieldSolution solution;
  std::vector<CheckRow> rows;
};
SimulationResult simulate(const ScalarFieldSystem& system, const SimulationSetup& setup);
// t, x, y_i, p0_i, p1_i, [eps], H, S00, position and momentum residuals
// (blank on the first and last slice).
std::string solution_csv(const FieldSolution& sol);

}  // namespace pata
