// Batch driver: verification suites, simulations and report handling.
// Exit codes: 0 all checks pass, 1 some check failed, 2 usage or config error.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pata/suites.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::string suites;
  std::uint64_t seed = 1;
  std::string out = ".";
  int n = 2;
  int k = 1;
  std::string gauge = "none";
  int mesh = 256;
  std::string report_file;
  CLI::Option *seed_opt = nullptr, *n_opt = nullptr, *k_opt = nullptr, *gauge_opt = nullptr, *mesh_opt = nullptr,
              *suite_opt = nullptr, *out_opt = nullptr;
};

// Effective run settings: config file first, flags win.
struct Run {
  json config = json::object();
  pata::SuiteOptions opt;
  std::vector<std::string> suites;
  fs::path out = ".";
  bool suites_given = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

pata::Gauge parse_gauge(const std::string& g) {
  if (g == "none") return pata::Gauge::None;
  if (g == "h0") return pata::Gauge::H0;
  throw UsageError("gauge must be none or h0");
}

Run resolve(const Flags& f) {
  Run r;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot read config " + f.config);
    try {
      r.config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config parse error: ") + e.what());
    }
    if (!r.config.is_object()) throw UsageError("config must be a JSON object");
    static const std::vector<std::string> keys{"system", "params", "suites", "seed", "n", "k", "gauge", "mesh",
                                               "probes", "simulation", "legendre", "out"};
    for (const auto& [key, v] : r.config.items())
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError("unknown config key: " + key);
  }
  const json& c = r.config;
  r.opt.seed = c.value("seed", std::uint64_t{1});
  r.opt.n = c.value("n", 2);
  r.opt.k = c.value("k", 1);
  r.opt.mesh = c.value("mesh", 256);
  r.opt.probes = c.value("probes", 30);
  r.opt.gauge = parse_gauge(c.value("gauge", std::string("none")));
  r.out = c.value("out", std::string("."));
  if (c.contains("suites")) {
    r.suites_given = true;
    r.suites = c["suites"].get<std::vector<std::string>>();
  }
  if (f.seed_opt->count()) r.opt.seed = f.seed;
  if (f.n_opt->count()) r.opt.n = f.n;
  if (f.k_opt->count()) r.opt.k = f.k;
  if (f.mesh_opt->count()) r.opt.mesh = f.mesh;
  if (f.gauge_opt->count()) r.opt.gauge = parse_gauge(f.gauge);
  if (f.out_opt->count()) r.out = f.out;
  if (f.suite_opt->count()) {
    r.suites_given = true;
    r.suites = split_list(f.suites);
  }
  if (r.suites.size() == 1 && r.suites[0] == "all") r.suites = pata::suite_names();
  return r;
}

json parameters(const Run& r) {
  return {{"n", r.opt.n},
          {"k", r.opt.k},
          {"probes", r.opt.probes},
          {"mesh", r.opt.mesh},
          {"gauge", r.opt.gauge == pata::Gauge::H0 ? "h0" : "none"},
          {"system", r.config.value("system", "")},
          {"params", r.config.value("params", json::object())}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write " + p.string());
  out << text;
}

int emit(const pata::Report& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.json", pata::report_json(report).dump(2) + "\n");
  write_file(dir / "report.csv", pata::report_csv(report));
  std::cout << pata::report_text(report);
  return report.all_pass() ? 0 : 1;
}

pata::System configured_system(const Run& r, const std::string& fallback) {
  const std::string name = r.config.value("system", fallback);
  return pata::build_system(name, r.config.value("params", json::object()));
}

int cmd_verify(const Run& r) {
  if (r.suites.empty())
    throw UsageError(std::string(r.suites_given ? "empty suite list" : "no suites selected") +
                     "; use --suite NAME[,NAME...] or --suite all");
  for (const auto& s : r.suites)
    if (std::find(pata::suite_names().begin(), pata::suite_names().end(), s) == pata::suite_names().end())
      throw UsageError("unknown suite: " + s);
  pata::Report report;
  report.command = "verify";
  report.seed = r.opt.seed;
  report.parameters = parameters(r);
  report.parameters["suites"] = r.suites;
  for (const auto& s : r.suites)
    for (auto& row : pata::run_suite(s, r.opt)) report.rows.push_back(std::move(row));
  return emit(report, r.out);
}

int cmd_simulate(const Run& r) {
  const pata::System sys = configured_system(r, "scalar_field");
  const auto* sf = std::get_if<pata::ScalarFieldSystem>(&sys);
  if (!sf) throw UsageError("simulate needs system scalar_field");
  json block = r.config.value("simulation", json::object());
  if (!r.config.contains("simulation") && !r.config.contains("system")) {
    // Klein-Gordon standing wave by default
    block = {{"exact", "cos(sqrt(5)*x1)*cos(2*x2)"}, {"X", 2 * 3.14159265358979323846}};
  }
  pata::Report report;
  report.command = "simulate";
  report.seed = r.opt.seed;
  report.parameters = parameters(r);
  report.parameters["simulation"] = block;
  const auto setup = pata::simulation_setup(*sf, block, r.opt.mesh, r.opt.gauge);
  const auto result = pata::simulate(*sf, setup);
  report.rows = result.rows;
  fs::create_directories(r.out);
  write_file(r.out / "solution.csv", pata::solution_csv(result.solution));
  return emit(report, r.out);
}

int cmd_legendre(const Run& r) {
  pata::Report report;
  report.command = "legendre-check";
  report.seed = r.opt.seed;
  report.parameters = parameters(r);
  if (r.config.contains("system")) {
    const bool singular = r.config.value("legendre", json::object()).value("singular_probe", false);
    report.rows = pata::legendre_rows(configured_system(r, ""), pata::suite_seed(r.opt.seed, "legendre"),
                                      r.opt.probes, singular);
  } else {
    report.rows = pata::run_suite("legendre", r.opt);
  }
  return emit(report, r.out);
}

int cmd_maxwell(const Run& r) {
  json params = r.config.value("params", json::object());
  if (!r.config.contains("system") && !params.contains("n")) params["n"] = std::max(2, r.opt.n);
  const pata::System sys = pata::build_system(r.config.value("system", std::string("maxwell")), params);
  const auto* mx = std::get_if<pata::MaxwellSystem>(&sys);
  if (!mx) throw UsageError("maxwell-check needs system maxwell");
  pata::Report report;
  report.command = "maxwell-check";
  report.seed = r.opt.seed;
  report.parameters = parameters(r);
  report.rows = pata::maxwell_rows(*mx, pata::suite_seed(r.opt.seed, "maxwell"), r.opt.probes);
  return emit(report, r.out);
}

int cmd_report(const Flags& f, const Run& r) {
  const fs::path file = f.report_file.empty() ? r.out / "report.json" : fs::path(f.report_file);
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read " + file.string());
  pata::Report report;
  try {
    report = pata::report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed report: ") + e.what());
  }
  std::cout << pata::report_text(report);
  if (f.out_opt->count()) {
    fs::create_directories(r.out);
    write_file(r.out / "report.csv", pata::report_csv(report));
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariant Hamiltonian field theory checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  f.suite_opt = app.add_option("--suite", f.suites, "suite names, comma separated, or all");
  f.seed_opt = app.add_option("--seed", f.seed, "master seed");
  f.out_opt = app.add_option("--out", f.out, "output directory");
  f.n_opt = app.add_option("--n", f.n, "base dimension")->check(CLI::Range(1, 4));
  f.k_opt = app.add_option("--k", f.k, "field count")->check(CLI::Range(1, 3));
  f.gauge_opt = app.add_option("--gauge", f.gauge, "none or h0")->check(CLI::IsMember({"none", "h0"}));
  f.mesh_opt = app.add_option("--mesh", f.mesh, "finest mesh of refinement studies")->check(CLI::PositiveNumber);

  std::string list;
  for (const auto& s : pata::suite_names()) list += (list.empty() ? "" : ", ") + s;
  auto* verify = app.add_subcommand("verify", "run verification suites: " + list);
  auto* simulate = app.add_subcommand("simulate", "integrate a scalar field and check it on three meshes");
  auto* legendre = app.add_subcommand("legendre-check", "Legendre round trips and envelope gradients");
  auto* maxwell = app.add_subcommand("maxwell-check", "electromagnetic bracket, gauge and manufactured checks");
  auto* report = app.add_subcommand("report", "print a stored report.json");
  report->add_option("file", f.report_file, "report.json (default OUT/report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Run r = resolve(f);
    if (*verify) return cmd_verify(r);
    if (*simulate) return cmd_simulate(r);
    if (*legendre) return cmd_legendre(r);
    if (*maxwell) return cmd_maxwell(r);
    if (*report) return cmd_report(f, r);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pata::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pata::CflViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
