#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sdrift/analysis.hpp"
#include "sdrift/assembly.hpp"
#include "sdrift/config.hpp"
#include "sdrift/csv.hpp"
#include "sdrift/domain.hpp"
#include "sdrift/fields.hpp"
#include "sdrift/solver.hpp"

namespace sdrift {

namespace fs = std::filesystem;

struct Verdict {
  std::string check;
  bool pass = false;
  std::string detail;
};

struct ScenarioResult {
  std::string name;
  std::vector<std::string> files;
  std::map<std::string, double> metrics;
  std::vector<Verdict> verdicts;

  bool passed() const {
    return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
  void verdict(const std::string& check, bool pass, const std::string& detail) {
    verdicts.push_back({check, pass, detail});
  }
};

using Schema = std::map<std::string, std::string>;

/// A named study: `execute` writes its tables, `judge` derives verdicts from
/// the written tables alone so a result directory can be re-judged offline.
struct Scenario {
  std::string name;
  std::string citation;
  std::function<Schema()> schema;
  std::function<void(const Config&, const fs::path&, ScenarioResult&)> execute;
  std::function<void(const Config&, const fs::path&, ScenarioResult&)> judge;
};

// ---------------------------------------------------------------------------
// Config helpers

inline Schema krylov_schema(const std::string& method = "cg", const std::string& precond = "ssor",
                            const std::string& omega = "1.5", const std::string& rtol = "1e-10") {
  return {{"method", method}, {"rtol", rtol}, {"max_iter", "20000"}, {"precond", precond}, {"omega", omega}};
}

inline Method method_from(const std::string& s) {
  if (s == "cg") return Method::cg;
  if (s == "bicgstab") return Method::bicgstab;
  throw Error(Errc::invalid_argument, "unknown method '" + s + "' (cg, bicgstab)");
}

inline Precond precond_from(const std::string& s) {
  if (s == "none") return Precond::none;
  if (s == "jacobi") return Precond::jacobi;
  if (s == "ssor") return Precond::ssor;
  throw Error(Errc::invalid_argument, "unknown preconditioner '" + s + "' (none, jacobi, ssor)");
}

inline Scheme scheme_from(const std::string& s) {
  if (s == "upwind") return Scheme::upwind;
  if (s == "centered") return Scheme::centered;
  throw Error(Errc::invalid_argument, "unknown scheme '" + s + "' (upwind, centered)");
}

inline KrylovConfig krylov_from(const Config& c) {
  KrylovConfig k;
  k.method = method_from(c.str("method"));
  k.rtol = c.num("rtol");
  k.max_iter = c.integer("max_iter");
  k.precond = precond_from(c.str("precond"));
  k.omega = c.num("omega");
  k.validate();
  return k;
}

inline FixedPointConfig fixed_point_from(const Config& c) {
  FixedPointConfig fp;
  fp.tol = c.num("fp_tol");
  fp.max_outer = c.integer("fp_max");
  fp.damping = c.num("damping");
  fp.validate();
  return fp;
}

/// Semicolon separated entries, e.g. centres "0,0,0;1,0,0" or vector expressions.
inline std::vector<std::string> entries(const std::string& s) {
  std::vector<std::string> out;
  for (auto& e : split(s, ';'))
    if (!e.empty()) out.push_back(e);
  return out;
}

inline std::vector<Vec3> centers_from(const std::string& s) {
  std::vector<Vec3> out;
  for (const auto& e : entries(s)) out.push_back(parse_vec3(e, "centers"));
  return out;
}

inline Schema merge(Schema a, const Schema& b) {
  for (const auto& [k, v] : b) a[k] = v;
  return a;
}

inline void emit(ScenarioResult& res, const fs::path& dir, const std::string& file, const Table& t) {
  save_csv((dir / file).string(), t);
  res.files.push_back(file);
}

inline Table table_in(const fs::path& dir, const std::string& file) { return load_csv((dir / file).string()); }

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return v.size() >= 2;
}

inline std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

// ---------------------------------------------------------------------------
// counterexample

namespace scenario {

inline Scenario counterexample() {
  Scenario s;
  s.name = "counterexample";
  s.citation = "Section 1: u(x) = c(1-|x|^2) solves the homogeneous problem for alpha = -3 with a point singularity";
  s.schema = [] {
    return merge(krylov_schema("bicgstab", "ssor", "1.2"),
                 {{"radius", "1"}, {"h", "0.05"}, {"alpha", "-3"}, {"u", "1-rho^2"}, {"scheme", "centered"},
                  {"epsilons", "0.2,0.1,0.05"}, {"ritz_scheme", "upwind"}, {"ritz_steps", "200"},
                  {"residual_tol", "1e-8"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const auto gm = build_grid(Ball{{0, 0, 0}, c.num("radius")}, c.num("h"));
    DriftSpec d;
    d.alpha = c.num("alpha");
    d.singular = Singularity::point;
    const auto sys = assemble_direct(gm.mask, d, scheme_from(c.str("scheme")));
    const auto u = sample(gm.grid, Expression(c.str("u")));
    double worst = 0.0;
    for (double r : apply_operator(sys, u)) worst = std::max(worst, std::abs(r));
    Table t({"h", "interior_nodes", "max_residual", "max_abs_u", "peclet_warnings"});
    t.add({gm.grid.h(), gm.mask.active_count(), worst, max_abs(gm.mask, u), sys.warnings.size()});
    emit(res, dir, "residual.csv", t);

    KrylovConfig kc = krylov_from(c);
    Table ritz({"epsilon", "ritz_value", "steps"});
    for (double eps : c.list("epsilons")) {
      d.epsilon = eps;
      const auto reg = assemble_direct(gm.mask, d, scheme_from(c.str("ritz_scheme")));
      const auto r = ritz_probe(reg, kc, c.integer("ritz_steps"));
      ritz.add({eps, r.value, r.iterations});
    }
    emit(res, dir, "ritz.csv", ritz);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "residual.csv");
    const double worst = t.num(0, "max_residual");
    res.metrics["max_residual"] = worst;
    res.verdict("residual", worst <= c.num("residual_tol"),
                "max interior residual " + fmt(worst) + " <= " + c.str("residual_tol"));
    const auto ritz = table_in(dir, "ritz.csv").nums("ritz_value");
    res.metrics["ritz_smallest_epsilon"] = ritz.empty() ? 0.0 : ritz.back();
    res.verdict("ritz_decreasing", strictly_decreasing(ritz), "Ritz values " + list_text(ritz));
  };
  return s;
}

// ---------------------------------------------------------------------------
// qform

inline Scenario qform() {
  Scenario s;
  s.name = "qform";
  s.citation = "Proposition 2.2: B[u,u] = pi alpha int_Gamma |u|^2 dl";
  s.schema = [] {
    return merge(shape_schema("cylinder"), {{"alpha", "-2"},
                                            {"h", "0.02,0.01"},
                                            {"u", "pos(1-z^2)^2*pos(1-r^2)^2"},
                                            {"tol", "0.10"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Shape shape = shape_from(c);
    Table t({"h", "bilinear", "limit", "rel_error"});
    for (double h : c.list("h")) {
      const auto gm = build_grid(shape, h);
      DriftSpec d;
      d.alpha = c.num("alpha");
      const WeakFormEvaluator ev(gm.mask, d);
      const auto u = sample(gm.grid, Expression(c.str("u")));
      const double b = bilinear_form(ev, u, u), lim = quadratic_form_limit(ev, u);
      require(lim != 0.0, Errc::invalid_argument, "qform: u vanishes on the axis");
      t.add({h, b, lim, std::abs(b - lim) / std::abs(lim)});
    }
    emit(res, dir, "qform.csv", t);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const auto err = table_in(dir, "qform.csv").nums("rel_error");
    require(!err.empty(), Errc::invalid_argument, "qform: empty table");
    res.metrics["rel_error_coarse"] = err.front();
    res.metrics["rel_error_fine"] = err.back();
    res.verdict("identity", err.front() <= c.num("tol"), "relative error " + fmt(err.front()) + " <= " + c.str("tol"));
    res.verdict("refinement", strictly_decreasing(err), "relative errors " + list_text(err));
  };
  return s;
}

// ---------------------------------------------------------------------------
// deltagamma

inline Scenario deltagamma() {
  Scenario s;
  s.name = "deltagamma";
  s.citation = "h = ln(1/|x'|) is harmonic off the axis: -Lap h = 2 pi delta_Gamma";
  s.schema = [] {
    return merge(shape_schema("cylinder"), {{"h", "0.02,0.01"},
                                            {"phi", "pos(1-r^2)^2"},
                                            {"phi_zero", "pos(1-((x-0.5)^2+y^2+z^2)/0.09)^3"},
                                            {"tol", "0.05"},
                                            {"zero_const", "1"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Shape shape = shape_from(c);
    Table t({"case", "h", "lhs", "rhs"});
    for (double h : c.list("h")) {
      const auto gm = build_grid(shape, h);
      const WeakFormEvaluator ev(gm.mask, DriftSpec{});
      const auto a = delta_gamma_check(ev, sample(gm.grid, Expression(c.str("phi"))));
      t.add({"radial", h, a.lhs, a.rhs});
      const auto z = delta_gamma_check(ev, sample(gm.grid, Expression(c.str("phi_zero"))));
      t.add({"zero", h, z.lhs, z.rhs});
    }
    emit(res, dir, "deltagamma.csv", t);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "deltagamma.csv");
    bool radial_ok = true, zero_ok = true;
    std::string radial, zero;
    double worst = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double h = t.num(i, "h"), lhs = t.num(i, "lhs"), rhs = t.num(i, "rhs");
      if (t.text(i, "case") == "radial") {
        const double rel = std::abs(lhs - rhs) / std::abs(rhs);
        worst = std::max(worst, rel);
        radial_ok = radial_ok && rel <= c.num("tol");
        radial += " h=" + fmt(h) + ":" + fmt(rel);
      } else {
        const double bound = c.num("zero_const") * h * h;
        zero_ok = zero_ok && rhs == 0.0 && std::abs(lhs) <= bound;
        zero += " h=" + fmt(h) + ":|lhs|=" + fmt(std::abs(lhs)) + "<=" + fmt(bound);
      }
    }
    res.metrics["radial_rel_error"] = worst;
    res.verdict("radial", radial_ok && !radial.empty(), "relative errors" + radial);
    res.verdict("zero_rhs", zero_ok && !zero.empty(), "zero case" + zero);
  };
  return s;
}

// ---------------------------------------------------------------------------
// darboux

inline Scenario darboux() {
  Scenario s;
  s.name = "darboux";
  s.citation = "Proposition 7.2: u(x) = |x'|^|alpha| v(x) turns the drift problem into a weighted one";
  s.schema = [] {
    return merge(krylov_schema(), {{"radius", "1"},
                                   {"alphas", "-0.5,-1,-2"},
                                   {"w", "pos(1-rho^2)^3"},
                                   {"h", "0.1,0.05,0.025"},
                                   {"cross_rate_min", "0.8"},
                                   {"weighted_rate_min", "1.0"},
                                   {"trace_slack", "0.2"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    KrylovConfig cg = krylov_from(c);
    cg.method = Method::cg;
    KrylovConfig bi = cg;
    bi.method = Method::bicgstab;
    Table study({"alpha", "h", "unknowns", "weighted_max", "weighted_l2", "direct_max", "direct_l2", "cross_l2",
                 "trace_max", "weighted_iterations", "direct_iterations"});
    Table rates({"alpha", "weighted_l2_rate", "direct_l2_rate", "cross_rate", "trace_rate"});
    const Shape ball = Ball{{0, 0, 0}, c.num("radius")};
    for (double alpha : c.list("alphas")) {
      const auto t = manufactured_study(ball, alpha, Expression(c.str("w")), c.list("h"), cg, bi);
      for (const auto& r : t.rows)
        study.add({alpha, r.h, r.unknowns, r.weighted_max, r.weighted_l2, r.direct_max, r.direct_l2, r.cross_l2,
                   r.trace_max, r.weighted_iterations, r.direct_iterations});
      rates.add({alpha, t.weighted_l2_rate, t.direct_l2_rate, t.cross_rate, t.trace_rate});
    }
    emit(res, dir, "study.csv", study);
    emit(res, dir, "rates.csv", rates);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "rates.csv");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double alpha = t.num(i, "alpha");
      const std::string tag = "alpha=" + fmt(alpha);
      const double cross = t.num(i, "cross_rate"), trace = t.num(i, "trace_rate"), wr = t.num(i, "weighted_l2_rate");
      const double trace_min = std::min(std::abs(alpha), 1.0) - c.num("trace_slack");
      res.metrics["cross_rate " + tag] = cross;
      res.metrics["trace_rate " + tag] = trace;
      res.verdict("cross_rate " + tag, cross >= c.num("cross_rate_min"),
                  "fitted slope " + fmt(cross) + " >= " + c.str("cross_rate_min"));
      res.verdict("trace_rate " + tag, trace >= trace_min, "fitted slope " + fmt(trace) + " >= " + fmt(trace_min));
      res.verdict("weighted_rate " + tag, wr >= c.num("weighted_rate_min"),
                  "fitted slope " + fmt(wr) + " >= " + c.str("weighted_rate_min"));
    }
  };
  return s;
}

// ---------------------------------------------------------------------------
// fixedpoint

inline Scenario fixedpoint() {
  Scenario s;
  s.name = "fixedpoint";
  s.citation = "Proposition 7.4: the map A(v) := u^v has a unique fixed point";
  s.schema = [] {
    return merge(krylov_schema(), {{"radius", "1"},
                                   {"h", "0.05"},
                                   {"alpha", "-2"},
                                   {"psi", "0,0.5*x*z,0.5*x*y"},
                                   {"f", "x,0,0"},
                                   {"fp_tol", "1e-10"},
                                   {"fp_max", "50"},
                                   {"damping", "1"},
                                   {"seed", "42"},
                                   {"init_amp", "1"},
                                   {"b_max", "0.5"},
                                   {"agree_factor", "10"},
                                   {"axis_margin", "4"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const auto gm = build_grid(Ball{{0, 0, 0}, c.num("radius")}, c.num("h"));
    const double h = gm.grid.h();
    DriftSpec d;
    d.alpha = c.num("alpha");
    d.divfree = CurlPotential{VectorExpression(c.str("psi"))};
    const auto f = sample(gm.grid, VectorExpression(c.str("f")));
    const KrylovConfig kc = krylov_from(c);
    const FixedPointConfig fp = fixed_point_from(c);
    const auto a = solve_full(gm.mask, d, f, kc, fp);
    const auto init = random_field(gm.mask, static_cast<std::uint64_t>(c.integer("seed")), c.num("init_amp"));
    const auto b = solve_full(gm.mask, d, f, kc, fp, &init);

    Table hist({"start", "iter", "change"});
    for (const auto& st : a.history) hist.add({"zero", st.iter, st.change});
    for (const auto& st : b.history) hist.add({"random", st.iter, st.change});
    emit(res, dir, "history.csv", hist);

    double b_inf = 0.0;
    const auto bf = sample_divfree(gm.mask, d);
    for (auto n : gm.mask.active_nodes()) b_inf = std::max(b_inf, norm(bf[n]));
    const double norm_a = l2_diff(gm.mask, a.solution, ScalarField(gm.grid));
    const double rel = norm_a > 0.0 ? l2_diff(gm.mask, a.solution, b.solution) / norm_a : 0.0;

    auto dsys = assemble_direct(gm.mask, d, Scheme::upwind);
    set_rhs_divergence(dsys, f);
    KrylovConfig bi = kc;
    bi.method = Method::bicgstab;
    const auto ds = solve_linear(dsys, bi);
    double off_axis = 0.0;
    for (auto n : gm.mask.active_nodes())
      if (axis_distance(gm.grid.node(n)) >= c.num("axis_margin") * h)
        off_axis = std::max(off_axis, std::abs(ds.solution[n] - a.solution[n]));

    Table sum({"metric", "value"});
    sum.add({"b_inf", b_inf});
    sum.add({"outer_zero", a.history.size()});
    sum.add({"outer_random", b.history.size()});
    sum.add({"krylov_iterations", a.iterations});
    sum.add({"rel_l2_difference", rel});
    sum.add({"fixed_point_residual", fixed_point_residual(gm.mask, d, f, a.solution)});
    sum.add({"energy_identity_residual", energy_identity_residual(gm.mask, d, f, a.solution)});
    sum.add({"trace_max", trace_on_gamma(gm.mask, a.solution, axis_samples(gm.mask)).max_abs});
    sum.add({"max_abs_u", max_abs(gm.mask, a.solution)});
    sum.add({"direct_difference_off_axis", off_axis});
    emit(res, dir, "summary.csv", sum);
    save_field((dir / "u.fld").string(), a.solution);
    res.files.push_back("u.fld");
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "summary.csv");
    for (std::size_t i = 0; i < t.rows.size(); ++i) res.metrics[t.text(i, "metric")] = t.num(i, "value");
    const double b_inf = res.metrics.at("b_inf"), rel = res.metrics.at("rel_l2_difference");
    const double bound = c.num("agree_factor") * c.num("fp_tol");
    res.verdict("drift_bound", b_inf <= c.num("b_max"), "max |b| " + fmt(b_inf) + " <= " + c.str("b_max"));
    res.verdict("uniqueness", rel <= bound, "relative L2 difference " + fmt(rel) + " <= " + fmt(bound));
  };
  return s;
}

// ---------------------------------------------------------------------------
// linf (with the level-set energy diagnostic)

inline Scenario linf() {
  Scenario s;
  s.name = "linf";
  s.citation = "Theorem 3.1: u is essentially bounded, ||u||_inf <= c ||f||_q";
  s.schema = [] {
    return merge(krylov_schema("cg", "ssor", "1.5", "1e-12"),
                 {{"radius", "1"},
                  {"alpha", "-2"},
                  {"f", "-x,0,0;0,0,-z^3;-sin(pi*x)/pi,-y*(1+z^2),0"},
                  {"h", "0.1,0.05,0.025"},
                  {"q", "4"},
                  {"levels", "8"},
                  {"tol", "0.25"},
                  {"truncation_max", "1.5"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const KrylovConfig kc = krylov_from(c);
    const double q = c.num("q");
    const int levels = c.integer("levels");
    require(levels > 0, Errc::invalid_argument, "linf: levels must be positive");
    Table lt({"case", "f", "h", "max_abs_u", "f_lq", "ratio"});
    Table tt({"case", "h", "level", "measure", "energy", "bound", "ratio"});
    const auto fs_ = entries(c.str("f"));
    for (std::size_t ci = 0; ci < fs_.size(); ++ci) {
      const VectorExpression fe(fs_[ci]);
      for (double h : c.list("h")) {
        const auto gm = build_grid(Ball{{0, 0, 0}, c.num("radius")}, h);
        const auto f = sample(gm.grid, fe);
        const auto sol = solve_darboux(gm.mask, c.num("alpha"), f, kc);
        const double flq = lq_norm(f, q, gm.mask);
        lt.add({ci, fs_[ci], h, max_abs(gm.mask, sol.solution), flq, linf_ratio(gm.mask, sol.solution, f, q)});
        double umax = 0.0;
        for (auto n : gm.mask.active_nodes()) umax = std::max(umax, sol.solution[n]);
        std::vector<double> ks;
        for (int j = 0; j < levels; ++j) ks.push_back(umax * j / levels);
        for (const auto& r : truncation_diagnostic(gm.mask, sol.solution, flq, q, ks))
          tt.add({ci, h, r.level, r.measure, r.energy, r.bound, r.ratio});
      }
    }
    emit(res, dir, "linf.csv", lt);
    emit(res, dir, "truncation.csv", tt);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "linf.csv");
    std::map<std::string, std::vector<double>> by_case;
    for (std::size_t i = 0; i < t.rows.size(); ++i) by_case[t.text(i, "case")].push_back(t.num(i, "ratio"));
    for (const auto& [k, ratios] : by_case) {
      const auto chk = linf_check(ratios, c.num("tol"));
      res.metrics["spread case " + k] = chk.spread;
      res.verdict("linf case " + k, chk.pass,
                  "ratios " + list_text(ratios) + ", spread " + fmt(chk.spread) + " <= " + c.str("tol"));
    }
    const auto tr = table_in(dir, "truncation.csv").nums("ratio");
    const double worst = tr.empty() ? 0.0 : *std::max_element(tr.begin(), tr.end());
    res.metrics["truncation_max_ratio"] = worst;
    res.verdict("truncation", !tr.empty() && worst <= c.num("truncation_max"),
                "max energy ratio " + fmt(worst) + " <= " + c.str("truncation_max"));
  };
  return s;
}

// ---------------------------------------------------------------------------
// holder

inline Scenario holder() {
  Scenario s;
  s.name = "holder";
  s.citation = "Theorem 1.2: the solution is Hoelder continuous; oscillation decays over dyadic balls";
  s.schema = [] {
    return merge(krylov_schema(), {{"radius", "1.25"},
                                   {"h", "0.015625"},
                                   {"alpha", "-0.5"},
                                   {"w", "1-smoothstep((rho-1)/0.25)"},
                                   {"R", "1"},
                                   {"levels", "2"},
                                   {"centers", "0,0,0;0,0,0.25;0.25,0,0;0.75,0,1"},
                                   {"k0", "0"},
                                   {"mu_min", "0.4"},
                                   {"mu_max", "0.6"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const double alpha = c.num("alpha");
    const auto gm = build_grid(Ball{{0, 0, 0}, c.num("radius")}, c.num("h"));
    const Manufactured ms{alpha, Expression(c.str("w"))};
    ScalarField src(gm.grid);
    for (auto n : gm.mask.active_nodes()) src[n] = ms.source(gm.grid.node(n));
    const auto sol = solve_darboux(gm.mask, alpha, src, krylov_from(c));
    const auto trace = darboux_trace(axis_samples(gm.mask), alpha, sol.darboux);
    const double R = c.num("R");
    const int J = c.integer("levels");
    Table prof({"center", "class", "j", "rho", "nodes", "m", "M", "omega", "sigma"});
    Table fits({"center", "class", "mu", "residual", "constant", "density"});
    for (const auto& x0 : centers_from(c.str("centers"))) {
      const auto p = oscillation_profile(gm.mask, sol.solution, x0, R, J, &trace);
      const auto sig = p.decay_ratios();
      for (std::size_t j = 0; j < p.scales.size(); ++j) {
        const auto& sc = p.scales[j];
        prof.add({format_center(x0), to_string(p.cls), static_cast<int>(j), sc.rho, sc.nodes, sc.m, sc.M, sc.omega,
                  j == 0 ? Table::Cell("") : Table::Cell(sig[j - 1])});
      }
      const auto fit = fit_holder(p);
      const double dens = density_condition(gm.mask, sol.solution, x0, p.scales.back().rho, c.num("k0"));
      fits.add({format_center(x0), to_string(p.cls), fit.mu, fit.residual, fit.constant ? "yes" : "no", dens});
    }
    emit(res, dir, "profile.csv", prof);
    emit(res, dir, "fits.csv", fits);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table p = table_in(dir, "profile.csv");
    double worst = 0.0;
    std::size_t ratios = 0;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      if (p.text(i, "sigma").empty()) continue;
      worst = std::max(worst, p.num(i, "sigma"));
      ++ratios;
    }
    res.metrics["max_decay_ratio"] = worst;
    res.verdict("decay", ratios > 0 && worst < 1.0, "max decay ratio " + fmt(worst) + " < 1");
    const Table f = table_in(dir, "fits.csv");
    std::map<std::string, int> classes;
    bool mu_ok = true;
    std::string mus;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      ++classes[f.text(i, "class")];
      if (f.text(i, "class") != to_string(CenterClass::on_axis)) continue;
      const double mu = f.num(i, "mu");
      mu_ok = mu_ok && mu >= c.num("mu_min") && mu <= c.num("mu_max");
      mus += " " + f.text(i, "center") + ":" + fmt(mu);
      res.metrics["mu " + f.text(i, "center")] = mu;
    }
    res.verdict("on_axis_mu", mu_ok && !mus.empty(),
                "mu in [" + c.str("mu_min") + ", " + c.str("mu_max") + "] at" + (mus.empty() ? " no on-axis center" : mus));
    bool all = true;
    std::string missing;
    for (auto cls : {CenterClass::interior_off_axis, CenterClass::on_axis, CenterClass::boundary})
      if (!classes.count(to_string(cls))) {
        all = false;
        missing += std::string(" ") + to_string(cls);
      }
    res.verdict("center_classes", all, all ? "all three classes present" : "missing" + missing);
  };
  return s;
}

// ---------------------------------------------------------------------------
// norms

inline Scenario norms() {
  Scenario s;
  s.name = "norms";
  s.citation = "Weak Lebesgue quasinorm sup_s s |{|f| > s}|^(1/p) of the singular drift";
  s.schema = [] {
    return merge(shape_schema("cylinder"), {{"h", "0.05,0.025"},
                                            {"g", "1/r"},
                                            {"p", "2"},
                                            {"lambda", "1"},
                                            {"centers", "0,0,0;0,0,0.5;0.5,0,0"},
                                            {"radii", "1,0.5,0.25,0.125"},
                                            {"target", "2.5066282746310002"},
                                            {"tol", "0.10"},
                                            {"morrey_tol", "0.15"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Shape shape = shape_from(c);
    const double p = c.num("p"), lambda = c.num("lambda");
    Table t({"h", "kind", "p", "lambda", "value", "argmax_center", "argmax_radius"});
    for (double h : c.list("h")) {
      const auto gm = build_grid(shape, h);
      const auto g = sample(gm.grid, Expression(c.str("g")));
      for (const auto& r : {weak_lp_norm(g, p, gm.mask),
                            weak_morrey_norm(g, p, lambda, gm.mask, centers_from(c.str("centers")), c.list("radii"))})
        t.add({h, to_string(r.kind), r.p, r.lambda, r.value, format_center(r.argmax_center), r.argmax_radius});
    }
    emit(res, dir, "norms.csv", t);
  };
  s.judge = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const Table t = table_in(dir, "norms.csv");
    const double target = c.num("target");
    std::vector<double> weak, morrey;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      (t.text(i, "kind") == to_string(NormKind::weak_lp) ? weak : morrey).push_back(t.num(i, "value"));
    double werr = 0.0;
    for (double v : weak) werr = std::max(werr, std::abs(v / target - 1.0));
    double mspread = 0.0;
    for (std::size_t i = 1; i < morrey.size(); ++i) mspread = std::max(mspread, std::abs(morrey[i] / morrey[i - 1] - 1.0));
    res.metrics["weak_lp_rel_error"] = werr;
    res.metrics["weak_morrey_change"] = mspread;
    res.verdict("weak_lp", !weak.empty() && werr <= c.num("tol"),
                "values " + list_text(weak) + " within " + c.str("tol") + " of " + fmt(target));
    res.verdict("weak_morrey", morrey.size() >= 2 && mspread <= c.num("morrey_tol"),
                "values " + list_text(morrey) + ", change " + fmt(mspread) + " <= " + c.str("morrey_tol"));
  };
  return s;
}

// ---------------------------------------------------------------------------
// mollify

inline Scenario mollify() {
  Scenario s;
  s.name = "mollify";
  s.citation = "Theorem 1.3 (existence step): mollification of the drift, ||b_k - b||_p' -> 0";
  s.schema = [] {
    return merge(krylov_schema(), {{"radius", "1"},
                                   {"h", "0.05"},
                                   {"alpha", "-2"},
                                   {"psi", "0,x*z,x*y"},
                                   {"f", "x,0,0"},
                                   {"radii_h", "4,2,0"},
                                   {"fp_tol", "1e-10"},
                                   {"fp_max", "50"},
                                   {"damping", "1"}});
  };
  s.execute = [](const Config& c, const fs::path& dir, ScenarioResult& res) {
    const auto gm = build_grid(Ball{{0, 0, 0}, c.num("radius")}, c.num("h"));
    const double h = gm.grid.h();
    const auto f = sample(gm.grid, VectorExpression(c.str("f")));
    const KrylovConfig kc = krylov_from(c);
    const FixedPointConfig fp = fixed_point_from(c);
    Table sols({"radius_h", "radius", "outer_iterations", "max_abs_u"});
    Table diffs({"from_radius", "to_radius", "l2_difference"});
    std::vector<ScalarField> us;
    std::vector<double> radii;
    for (double k : c.list("radii_h")) {
      DriftSpec d;
      d.alpha = c.num("alpha");
      d.divfree = CurlPotential{VectorExpression(c.str("psi"))};
      d.mollify_radius = k * h;
      const auto sol = solve_full(gm.mask, d, f, kc, fp);
      sols.add({k, k * h, sol.history.size(), max_abs(gm.mask, sol.solution)});
      us.push_back(sol.solution);
      radii.push_back(k * h);
    }
    for (std::size_t i = 1; i < us.size(); ++i) diffs.add({radii[i - 1], radii[i], l2_diff(gm.mask, us[i - 1], us[i])});
    emit(res, dir, "solutions.csv", sols);
    emit(res, dir, "differences.csv", diffs);
  };
  s.judge = [](const Config&, const fs::path& dir, ScenarioResult& res) {
    const auto d = table_in(dir, "differences.csv").nums("l2_difference");
    if (!d.empty()) res.metrics["last_difference"] = d.back();
    res.verdict("cauchy", strictly_decreasing(d), "consecutive L2 differences " + list_text(d));
  };
  return s;
}

}  // namespace scenario

inline const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> all = {scenario::counterexample(), scenario::darboux(), scenario::fixedpoint(),
                                            scenario::linf(),           scenario::holder(),  scenario::qform(),
                                            scenario::deltagamma(),     scenario::mollify(), scenario::norms()};
  return all;
}

inline const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return s;
  throw Error(Errc::invalid_argument, "unknown scenario '" + name + "'");
}

/// Re-derives verdicts from an existing result directory.
inline ScenarioResult judge_scenario(const std::string& name, const Config& given, const fs::path& dir) {
  const Scenario& s = find_scenario(name);
  const Config c = given.resolve(s.schema());
  ScenarioResult res;
  res.name = name;
  try {
    s.judge(c, dir, res);
  } catch (const Error& e) {
    throw Error(e.code(), name + ": " + e.what());
  }
  return res;
}

/// Resolves the config, writes resolved.cfg and the scenario tables into
/// `dir`, then judges the written tables.
inline ScenarioResult run_scenario(const std::string& name, const Config& given, const fs::path& dir) {
  const Scenario& s = find_scenario(name);
  const Config c = given.resolve(s.schema());
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(fs::is_directory(dir), Errc::io, "cannot create output directory " + dir.string());
  c.save((dir / "resolved.cfg").string());
  ScenarioResult res;
  res.name = name;
  res.files.push_back("resolved.cfg");
  try {
    s.execute(c, dir, res);
    s.judge(c, dir, res);
  } catch (const Error& e) {
    throw Error(e.code(), name + ": " + e.what());
  }
  return res;
}

inline void write_verdicts(std::ostream& os, const ScenarioResult& r) {
  for (const auto& v : r.verdicts) os << (v.pass ? "PASS " : "FAIL ") << r.name << ' ' << v.check << ": " << v.detail << '\n';
}

}  // namespace sdrift
