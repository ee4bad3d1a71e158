// One line per acceptance criterion. Exits 0 when every failing line is a
// known, documented deviation and nothing else fails.
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pata/suites.hpp"

using namespace pata;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
  // failing row ids that are accepted as documented deviations
  std::set<std::string> known;
  std::vector<std::string> unexpected;
};

// Folds rows into an outcome; rows whose id starts with a known prefix are
// reported but tolerated.
void absorb(Outcome& o, const std::vector<CheckRow>& rows, const std::vector<std::string>& known_prefixes = {}) {
  for (const auto& r : rows) {
    if (r.pass) continue;
    o.pass = false;
    const std::string id = r.suite + "/" + r.id;
    bool known = false;
    for (const auto& p : known_prefixes)
      if (id.rfind(p, 0) == 0) known = true;
    std::ostringstream s;
    s << id << " residual " << r.residual;
    if (r.expected && r.computed) s << " expected " << *r.expected << " computed " << *r.computed;
    if (known)
      o.known.insert(s.str());
    else
      o.unexpected.push_back(s.str());
  }
}

std::vector<CheckRow> pick(const std::vector<CheckRow>& rows, const std::string& prefix) {
  std::vector<CheckRow> out;
  for (const auto& r : rows)
    if (r.id.rfind(prefix, 0) == 0) out.push_back(r);
  return out;
}

std::string order_summary(const std::vector<CheckRow>& rows) {
  std::ostringstream s;
  s.precision(3);
  for (const auto& r : rows) {
    s << ' ' << r.id.substr(0, r.id.find('[')) << '=';
    if (r.computed)
      s << *r.computed;
    else
      s << r.residual;
  }
  return s.str();
}

}  // namespace

int main() {
  const std::uint64_t seed = 20261016;
  bool unexpected = false;
  auto report = [&](int id, const std::string& title, const Outcome& o) {
    std::printf("criterion %d [%s] %s:%s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str());
    for (const auto& k : o.known) std::printf("    known deviation: %s\n", k.c_str());
    for (const auto& u : o.unexpected) std::printf("    failure: %s\n", u.c_str());
    if (!o.unexpected.empty()) unexpected = true;
    std::fflush(stdout);
  };
  SuiteOptions base;
  base.seed = seed;
  base.probes = 30;
  base.mesh = 256;

  {
    Outcome o;
    const auto t0 = Clock::now();
    int rows = 0;
    for (int n : {2, 3})
      for (int k : {1, 2}) {
        SuiteOptions opt = base;
        opt.n = n;
        opt.k = k;
        for (const char* s : {"lemma2", "lemma3", "prop1", "prop2", "table"}) {
          const auto r = run_suite(s, opt);
          rows += static_cast<int>(r.size());
          absorb(o, r);
        }
      }
    const double t = seconds_since(t0);
    if (t >= 60.0) {
      o.pass = false;
      o.unexpected.push_back("runtime " + std::to_string(t) + " s ≥ 60 s");
    }
    o.detail = " " + std::to_string(rows) + " rows at 30 probes, n in {2,3}, k in {1,2}, tol 1e-9, " +
               std::to_string(t).substr(0, 5) + " s";
    report(1, "bracket algebra", o);
  }
  {
    Outcome o;
    const auto rows = run_suite("slice_brackets", base);
    absorb(o, rows);
    o.detail = order_summary(rows) + " (orders over meshes 64/128/256, PQ and QQ_PP are residuals)";
    report(2, "slice brackets on integrated Klein-Gordon", o);
  }
  {
    Outcome o;
    const auto rows = run_suite("stokes", base);
    absorb(o, rows);
    o.detail = order_summary(rows);
    report(3, "Stokes and pointwise bracket dynamics", o);
  }
  {
    Outcome o;
    const auto rows = run_suite("legendre", base);
    absorb(o, rows);
    std::ostringstream s;
    s.precision(3);
    for (const auto& r : rows) s << ' ' << r.id << '=' << r.residual;
    o.detail = s.str();
    report(4, "Legendre correspondence", o);
  }
  std::vector<CheckRow> kg = run_suite("kg", base);
  {
    Outcome o;
    const auto l2 = pick(kg, "standing_wave_l2");
    const auto energy = run_suite("kg_energy", base);
    absorb(o, l2);
    absorb(o, energy);
    std::ostringstream s;
    s.precision(3);
    s << " L2 order " << *l2.front().computed << ", drift " << energy[0].residual << " (tol 1e-6), run "
      << energy[1].residual << " s (tol 30)";
    o.detail = s.str();
    report(5, "Klein-Gordon dynamics", o);
  }
  {
    Outcome o;
    auto rows = pick(kg, "stress_divergence");
    const auto tensor = pick(kg, "stress_vs_hamiltonian_tensor");
    rows.insert(rows.end(), tensor.begin(), tensor.end());
    absorb(o, rows);
    std::ostringstream s;
    s.precision(3);
    s << " divergence order " << *rows[0].computed << ", |S + H tensor| " << rows[1].residual;
    o.detail = s.str();
    report(6, "stress-energy", o);
  }
  {
    Outcome o;
    std::ostringstream s;
    for (int n : {2, 3, 4}) {
      SuiteOptions opt = base;
      opt.n = n;
      const auto br = run_suite("maxwell_bracket", opt);
      absorb(o, br, {"maxwell_bracket/pi_A"});
      absorb(o, run_suite("maxwell", opt));
      s << " n=" << n << ": {pi,A} " << *br[0].computed << " vs " << *br[0].expected << ';';
    }
    o.detail = s.str() + " gauge and manufactured rows at 1e-10";
    report(7, "electromagnetic field", o);
  }
  {
    Outcome o;
    const std::vector<std::string> suites{"structural", "eq16", "admissible", "noether"};
    auto run_all = [&] {
      Report r;
      r.command = "verify";
      r.seed = seed;
      for (int n : {2, 3})
        for (int k : {1, 2}) {
          SuiteOptions opt = base;
          opt.n = n;
          opt.k = k;
          for (const auto& s : suites)
            for (auto& row : run_suite(s, opt)) r.rows.push_back(row);
        }
      return r;
    };
    const Report first = run_all(), second = run_all();
    absorb(o, first.rows);
    const bool same = report_json(first, false).dump() == report_json(second, false).dump() &&
                      report_csv(first, false) == report_csv(second, false);
    if (!same) {
      o.pass = false;
      o.unexpected.push_back("re-run report differs");
    }
    o.detail = " " + std::to_string(first.rows.size()) + " rows green: " + (first.all_pass() ? "yes" : "no") +
               ", re-run byte-identical: " + (same ? "yes" : "no");
    report(8, "structural invariants and determinism", o);
  }
  return unexpected ? 1 : 0;
}
