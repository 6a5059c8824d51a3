#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sdrift/sdrift.hpp"

using namespace sdrift;

namespace {

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config c = path.empty() ? Config() : Config::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(Errc::parse, "--set expects key=value, got '" + kv + "'");
    c.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return c;
}

int report(const ScenarioResult& r) {
  write_verdicts(std::cout, r);
  std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << '\n';
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elliptic problems with a drift singular on the x3-axis"};
  app.require_subcommand(1);
  int code = 0;

  // domain build
  auto* domain = app.add_subcommand("domain", "Grid and mask construction");
  domain->require_subcommand(1);
  auto* dbuild = domain->add_subcommand("build", "Build a mask and write it as text");
  dbuild->set_help_flag("--help", "Print this help message and exit");
  std::string shape = "ball", center = "0,0,0", lo = "-1,-1,-1", hi = "1,1,1", mask_out;
  double radius = 1.0, zmin = -1.0, zmax = 1.0, h = 0.05;
  dbuild->add_option("--shape", shape, "ball, cylinder or box")->capture_default_str();
  dbuild->add_option("--radius", radius)->capture_default_str();
  dbuild->add_option("--center", center, "ball centre x,y,z")->capture_default_str();
  dbuild->add_option("--zmin", zmin)->capture_default_str();
  dbuild->add_option("--zmax", zmax)->capture_default_str();
  dbuild->add_option("--lo", lo, "box corner x,y,z")->capture_default_str();
  dbuild->add_option("--hi", hi, "box corner x,y,z")->capture_default_str();
  dbuild->add_option("--h", h, "grid spacing")->capture_default_str();
  dbuild->add_option("--out", mask_out, "mask file")->required();
  dbuild->callback([&] {
    Config c;
    c.set("shape", shape);
    c.set("radius", fmt(radius));
    c.set("center", center);
    c.set("zmin", fmt(zmin));
    c.set("zmax", fmt(zmax));
    c.set("lo", lo);
    c.set("hi", hi);
    const auto gm = build_grid(shape_from(c.resolve(shape_schema())), h);
    save_mask(mask_out, gm.mask);
    std::cout << "grid " << gm.grid.n1() << 'x' << gm.grid.n2() << 'x' << gm.grid.n3() << ", interior "
              << gm.mask.active_count() << ", dirichlet " << gm.mask.count(NodeClass::dirichlet) << '\n';
  });

  // assembly build / dump
  auto* assembly = app.add_subcommand("assembly", "Discrete operators");
  assembly->require_subcommand(1);
  auto* abuild = assembly->add_subcommand("build", "Assemble a system from a run config");
  std::string acfg, sys_out;
  std::vector<std::string> aset;
  abuild->add_option("--config", acfg, "run config");
  abuild->add_option("--set", aset, "key=value override");
  abuild->add_option("--out", sys_out, "binary system file")->required();
  abuild->callback([&] {
    const Config c = load_config(acfg, aset).resolve(solve_schema());
    const auto gm = build_grid(shape_from(c), c.num("h"));
    const DriftSpec d = drift_from(c);
    DiscreteSystem sys = c.str("formulation") == "weighted" ? assemble_weighted(gm.mask, d.alpha)
                                                            : assemble_direct(gm.mask, d, scheme_from(c.str("scheme")));
    set_rhs_divergence(sys, flux_from(c.str("f"), gm.grid));
    save_system(sys_out, sys);
    for (const auto& w : sys.warnings) std::cerr << "warning [" << w.code << "]: " << w.message << " (" << w.value << ")\n";
    std::cout << to_string(sys.formulation) << " system, " << sys.unknowns() << " unknowns, " << sys.A.val.size()
              << " nonzeros\n";
  });
  auto* adump = assembly->add_subcommand("dump", "Export a stored system");
  std::string sys_in, format = "coo", dump_out, which = "A";
  adump->add_option("--system", sys_in, "binary system file")->required()->check(CLI::ExistingFile);
  adump->add_option("--format", format, "coo")->capture_default_str()->check(CLI::IsMember({"coo"}));
  adump->add_option("--matrix", which, "A or coupling")->capture_default_str()->check(CLI::IsMember({"A", "coupling"}));
  adump->add_option("--out", dump_out, "output file (default stdout)");
  adump->callback([&] {
    const auto sys = load_system(sys_in);
    const CsrMatrix& m = which == "A" ? sys.A : sys.coupling;
    if (dump_out.empty()) {
      m.write_coo(std::cout);
    } else {
      std::ofstream os(dump_out);
      if (!os) throw Error(Errc::io, "cannot write " + dump_out);
      m.write_coo(os);
    }
  });

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one problem and write the solution and a report");
  std::string scfg, sdir = "report";
  std::vector<std::string> sset;
  solve->add_option("--config", scfg, "run config");
  solve->add_option("--set", sset, "key=value override");
  solve->add_option("--out", sdir, "output directory")->capture_default_str();
  solve->callback([&] {
    const auto out = run_solve(load_config(scfg, sset), sdir);
    write_csv(std::cout, out.summary);
  });

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Oscillation, Hoelder and L-infinity diagnostics of a solution");
  std::string sol_in, grid_in, centers = "auto", an_out = "regularity.csv", an_f;
  double R = 0.25, q = 4.0, an_alpha = 0.0;
  int levels = 4;
  analyze_cmd->add_option("--solution", sol_in, "scalar field file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--grid", grid_in, "mask file (default grid.msk beside the solution)");
  analyze_cmd->add_option("--centers", centers, "auto or a file of x,y,z lines")->capture_default_str();
  analyze_cmd->add_option("--R", R, "largest radius")->capture_default_str();
  analyze_cmd->add_option("--levels", levels, "dyadic levels J (radii R/4^j, j = 0..J)")->capture_default_str();
  analyze_cmd->add_option("--q", q, "exponent for ||f||_q")->capture_default_str();
  analyze_cmd->add_option("--f", an_f, "flux expression or file:<path> for the L-infinity ratio");
  analyze_cmd->add_option("--alpha", an_alpha, "negative alpha adds the vanishing axis trace to the extrema");
  analyze_cmd->add_option("--out", an_out, "CSV output")->capture_default_str();
  analyze_cmd->callback([&] {
    const std::string gpath =
        grid_in.empty() ? (std::filesystem::path(sol_in).parent_path() / "grid.msk").string() : grid_in;
    const auto mask = load_mask(gpath);
    const auto u = load_scalar_field(sol_in, mask.grid());
    AnalyzeOptions opt;
    opt.centers = centers == "auto" ? auto_centers(mask) : load_centers(centers);
    opt.R = R;
    opt.levels = levels;
    opt.q = q;
    opt.f = an_f;
    opt.alpha = an_alpha;
    const Table t = analyze(mask, u, opt);
    save_csv(an_out, t);
    std::cout << t.rows.size() << " rows written to " << an_out << '\n';
  });

  // run / judge
  auto* run = app.add_subcommand("run", "Run a named scenario");
  std::string scenario, rcfg, rdir;
  std::vector<std::string> rset;
  run->add_option("scenario", scenario, "scenario name (see list)")->required();
  run->add_option("--config", rcfg, "scenario config");
  run->add_option("--set", rset, "key=value override");
  run->add_option("--out", rdir, "output directory (default out/<scenario>)");
  run->callback([&] {
    const auto res = run_scenario(scenario, load_config(rcfg, rset), rdir.empty() ? "out/" + scenario : rdir);
    code = report(res);
  });
  auto* judge = app.add_subcommand("judge", "Re-derive verdicts from an existing scenario directory");
  std::string jscenario, jdir, jcfg;
  judge->add_option("scenario", jscenario)->required();
  judge->add_option("dir", jdir)->required()->check(CLI::ExistingDirectory);
  judge->add_option("--config", jcfg, "scenario config (default <dir>/resolved.cfg)");
  judge->callback([&] {
    const std::string path = jcfg.empty() ? (std::filesystem::path(jdir) / "resolved.cfg").string() : jcfg;
    code = report(judge_scenario(jscenario, Config::load(path), jdir));
  });

  // golden compare
  auto* golden = app.add_subcommand("golden", "Golden-file regression");
  golden->require_subcommand(1);
  auto* gcmp = golden->add_subcommand("compare", "Compare result CSVs against golden CSVs");
  std::string gdir, gref;
  double rtol = 1e-10;
  gcmp->add_option("dir", gdir, "result directory")->required();
  gcmp->add_option("golden", gref, "golden directory")->required();
  gcmp->add_option("--rtol", rtol, "relative tolerance for numeric cells")->capture_default_str();
  gcmp->callback([&] {
    const auto v = compare_golden(gdir, gref, rtol);
    for (const auto& f : v.failures) std::cout << "FAIL " << f << '\n';
    std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << v.files << " files, " << v.cells << " cells\n";
    code = v.pass ? 0 : 1;
  });

  // list
  auto* list = app.add_subcommand("list", "List scenarios");
  list->callback([&] {
    for (const auto& s : scenarios()) std::cout << s.name << "  " << s.citation << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return code;
}
