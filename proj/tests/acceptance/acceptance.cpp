// Runs every scenario with its default settings and reports criteria 1-12.
// usage: acceptance [output_dir]

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sdrift/sdrift.hpp"

using namespace sdrift;

namespace {

struct Run {
  ScenarioResult result;
  double seconds = 0.0;
  std::string error;
};

Run execute(const std::string& name, const fs::path& dir) {
  Run r;
  fs::remove_all(dir);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.result = run_scenario(name, Config(), dir);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

int failures = 0;

void criterion(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " " << title << ": " << detail << std::endl;
}

// All verdicts of `run` whose check starts with one of `prefixes` (empty: all).
void from_verdicts(int id, const std::string& title, const Run& run, const std::vector<std::string>& prefixes = {}) {
  if (!run.error.empty()) {
    criterion(id, title, false, "error: " + run.error);
    return;
  }
  bool pass = true;
  std::size_t used = 0;
  std::string detail;
  for (const auto& v : run.result.verdicts) {
    bool match = prefixes.empty();
    for (const auto& p : prefixes) match = match || starts_with(v.check, p);
    if (!match) continue;
    ++used;
    pass = pass && v.pass;
    detail += (detail.empty() ? "" : "; ") + v.check + (v.pass ? " ok" : " FAILED") + " (" + v.detail + ")";
  }
  criterion(id, title, pass && used > 0, used ? detail : "no matching checks");
}

std::string seconds(double s) {
  std::ostringstream os;
  os.precision(3);
  os << s << " s";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  const fs::path golden = SDRIFT_GOLDEN_DIR;

  std::map<std::string, Run> runs;
  for (const auto& s : scenarios()) {
    runs[s.name] = execute(s.name, out / "first" / s.name);
    std::cout << "ran " << s.name << " in " << seconds(runs[s.name].seconds) << std::endl;
  }

  const Run& ce = runs["counterexample"];
  from_verdicts(1, "counterexample residual and Ritz monotonicity", ce);
  criterion(1, "counterexample runtime", ce.seconds <= 30.0, seconds(ce.seconds) + " <= 30 s");
  from_verdicts(2, "quadratic form identity", runs["qform"]);
  from_verdicts(3, "axis delta identity", runs["deltagamma"]);
  const Run& db = runs["darboux"];
  from_verdicts(4, "weighted and direct solves agree", db, {"cross_rate", "weighted_rate"});
  criterion(4, "equivalence study runtime", db.seconds <= 300.0, seconds(db.seconds) + " <= 300 s");
  from_verdicts(5, "axis trace decays", db, {"trace_rate"});
  from_verdicts(6, "uniqueness of the fixed point", runs["fixedpoint"]);
  from_verdicts(7, "L-infinity ratio stable", runs["linf"], {"linf case"});
  from_verdicts(8, "oscillation decay and on-axis exponent", runs["holder"]);
  from_verdicts(9, "level-set energy inequality", runs["linf"], {"truncation"});
  from_verdicts(10, "weak Lebesgue and weak Morrey estimators", runs["norms"]);
  from_verdicts(11, "mollified drifts form a Cauchy sequence", runs["mollify"]);

  // 12: rerun, byte compare, golden compare
  bool identical = true, golden_ok = true;
  std::string detail;
  std::size_t files = 0, cells = 0;
  for (const auto& s : scenarios()) {
    const fs::path a = out / "first" / s.name, b = out / "second" / s.name;
    const Run again = execute(s.name, b);
    if (!again.error.empty() || !runs[s.name].error.empty()) {
      identical = false;
      detail += " " + s.name + " errored;";
      continue;
    }
    const auto fa = csv_files(a);
    if (fa != csv_files(b)) {
      identical = false;
      detail += " " + s.name + " file lists differ;";
    }
    for (const auto& f : fa)
      if (slurp(a / f) != slurp(b / f)) {
        identical = false;
        detail += " " + s.name + "/" + f + " differs;";
      }
    try {
      const auto v = compare_golden(a.string(), (golden / s.name).string(), 1e-10);
      files += v.files;
      cells += v.cells;
      if (!v.pass) {
        golden_ok = false;
        detail += " " + s.name + ": " + v.failures.front() + (v.failures.size() > 1 ? " (and more)" : "") + ";";
      }
    } catch (const Error& e) {
      golden_ok = false;
      detail += " " + s.name + ": " + e.what() + ";";
    }
  }
  criterion(12, "determinism and golden files", identical && golden_ok,
            (identical ? "reruns byte-identical" : "reruns differ") + std::string(", golden ") +
                std::to_string(files) + " files " + std::to_string(cells) + " cells at rtol 1e-10" + detail);

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
