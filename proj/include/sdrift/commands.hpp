#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sdrift/analysis.hpp"
#include "sdrift/scenarios.hpp"

namespace sdrift {

// ---------------------------------------------------------------------------
// solve

inline Schema solve_schema() {
  return merge(merge(shape_schema("ball"), krylov_schema()),
               {{"h", "0.05"},
                {"alpha", "-2"},
                {"epsilon", "0"},
                {"psi", ""},
                {"f", "x,0,0"},
                {"formulation", "weighted"},
                {"scheme", "upwind"},
                {"mollify_radius", "0"},
                {"fp_tol", "1e-8"},
                {"fp_max", "50"},
                {"damping", "1"},
                {"init", "zero"},
                {"seed", "0"}});
}

inline DriftSpec drift_from(const Config& c) {
  DriftSpec d;
  d.alpha = c.num("alpha");
  d.epsilon = c.num("epsilon");
  d.mollify_radius = c.num("mollify_radius");
  if (!trim(c.str("psi")).empty()) d.divfree = CurlPotential{VectorExpression(c.str("psi"))};
  d.validate();
  return d;
}

/// `f` is a vector expression or `file:<path>` holding a 3-component field on the grid.
inline VectorField flux_from(const std::string& spec, const Grid& g) {
  if (spec.rfind("file:", 0) == 0) return load_vector_field(spec.substr(5), g);
  return sample(g, VectorExpression(spec));
}

struct SolveOutput {
  DomainMask mask;
  SolveReport report;
  Table summary;
};

/// Builds the grid, solves, and writes grid.msk, u.fld, report.csv,
/// history.csv and resolved.cfg into `dir`.
inline SolveOutput run_solve(const Config& given, const fs::path& dir) {
  const Config c = given.resolve(solve_schema());
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(fs::is_directory(dir), Errc::io, "cannot create output directory " + dir.string());
  c.save((dir / "resolved.cfg").string());

  const auto gm = build_grid(shape_from(c), c.num("h"));
  const DriftSpec d = drift_from(c);
  const VectorField f = flux_from(c.str("f"), gm.grid);
  KrylovConfig kc = krylov_from(c);
  const std::string form = c.str("formulation");

  SolveOutput out;
  out.mask = gm.mask;
  if (form == "weighted") {
    require(d.epsilon == 0.0, Errc::invalid_argument, "solve: the weighted formulation needs epsilon = 0");
    ScalarField init;
    const std::string start = c.str("init");
    if (start == "random")
      init = random_field(gm.mask, static_cast<std::uint64_t>(c.integer("seed")), 1.0);
    else
      require(start == "zero", Errc::invalid_argument, "solve: init must be zero or random");
    out.report = solve_full(gm.mask, d, f, kc, fixed_point_from(c), start == "random" ? &init : nullptr);
  } else if (form == "direct") {
    if (kc.method == Method::cg) kc.method = Method::bicgstab;
    auto sys = assemble_direct(gm.mask, d, scheme_from(c.str("scheme")));
    set_rhs_divergence(sys, f);
    out.report = solve_linear(sys, kc);
  } else {
    throw Error(Errc::invalid_argument, "solve: formulation must be weighted or direct");
  }

  const auto& u = out.report.solution;
  Table t({"metric", "value"});
  t.add({"formulation", to_string(out.report.formulation)});
  t.add({"unknowns", gm.mask.active_count()});
  t.add({"krylov_iterations", out.report.iterations});
  t.add({"krylov_residual", out.report.residual});
  t.add({"outer_iterations", out.report.history.size()});
  if (form == "weighted") t.add({"fixed_point_residual", fixed_point_residual(gm.mask, d, f, u)});
  t.add({"energy_identity_residual", energy_identity_residual(gm.mask, d, f, u)});
  double trace = 0.0;
  try {
    trace = trace_on_gamma(gm.mask, u, axis_samples(gm.mask)).max_abs;
  } catch (const Error& e) {
    if (e.code() != Errc::no_axis) throw;
  }
  t.add({"trace_max", trace});
  t.add({"max_abs_u", max_abs(gm.mask, u)});
  for (int p : {2, 3, 4}) t.add({"w1p_norm_p" + std::to_string(p), w1p_norm(gm.mask, u, p)});
  save_csv((dir / "report.csv").string(), t);

  Table h({"iter", "change"});
  for (const auto& s : out.report.history) h.add({s.iter, s.change});
  save_csv((dir / "history.csv").string(), h);
  save_mask((dir / "grid.msk").string(), gm.mask);
  save_field((dir / "u.fld").string(), u);
  out.summary = std::move(t);
  return out;
}

// ---------------------------------------------------------------------------
// analyze

/// One centre on the axis, one interior node far from both the axis and the
/// boundary, and one Dirichlet node level with the axis centre.
inline std::vector<Vec3> auto_centers(const DomainMask& mask) {
  const Grid& g = mask.grid();
  const double h = g.h();
  std::vector<Vec3> out;
  double zmid = 0.0;
  bool has_axis = false;
  try {
    const auto axis = axis_samples(mask);
    const double mean = std::accumulate(axis.z.begin(), axis.z.end(), 0.0) / static_cast<double>(axis.size());
    zmid = axis.z[0];
    for (double z : axis.z)
      if (std::abs(z - mean) < std::abs(zmid - mean)) zmid = z;
    out.push_back({0.0, 0.0, zmid});
    has_axis = true;
  } catch (const Error& e) {
    if (e.code() != Errc::no_axis) throw;
  }
  const auto dist = distance_to_exterior_sq(mask);
  double best = -1.0;
  Vec3 off{};
  for (auto n : mask.active_nodes()) {
    const Vec3 x = g.node(n);
    const double score = std::min(axis_distance(x), std::sqrt(dist[n]) * h);
    if (score > best) {
      best = score;
      off = x;
    }
  }
  require(best >= 0.0, Errc::empty_domain, "auto_centers: empty interior");
  out.push_back(off);
  if (!has_axis) zmid = off[2];
  double xmax = -std::numeric_limits<double>::infinity();
  Vec3 bnd{};
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (mask.cls(n) != NodeClass::dirichlet) continue;
    const Vec3 x = g.node(n);
    if (std::abs(x[1] - (has_axis ? 0.0 : off[1])) < h && std::abs(x[2] - zmid) < h && x[0] > xmax) {
      xmax = x[0];
      bnd = x;
    }
  }
  if (std::isfinite(xmax)) out.push_back(bnd);
  return out;
}

inline std::vector<Vec3> load_centers(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  std::vector<Vec3> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (!line.empty()) out.push_back(parse_vec3(line, path));
  }
  require(!out.empty(), Errc::invalid_argument, "centers file " + path + " lists no centers");
  return out;
}

struct AnalyzeOptions {
  std::vector<Vec3> centers;
  double R = 0.25;
  int levels = 4;
  double q = 4.0;
  std::string f;       // flux for the L-infinity ratio; empty skips it
  double alpha = 0.0;  // negative: add weight-vanishing trace samples on the axis
};

/// Per centre and scale: center, class, rho, m, M, omega, sigma, mu, linf_ratio, trace_max.
inline Table analyze(const DomainMask& mask, const ScalarField& u, const AnalyzeOptions& opt) {
  require(!opt.centers.empty(), Errc::invalid_argument, "analyze: no centers");
  double trace_max = 0.0;
  TraceSamples trace;
  bool has_trace = false;
  try {
    const auto axis = axis_samples(mask);
    trace_max = trace_on_gamma(mask, u, axis).max_abs;
    if (opt.alpha < 0.0) {
      ScalarField v(mask.grid());
      for (auto n : mask.active_nodes()) v[n] = u[n] / darboux_weight(opt.alpha, mask.grid().node(n));
      trace = darboux_trace(axis, opt.alpha, v);
      has_trace = true;
    }
  } catch (const Error& e) {
    if (e.code() != Errc::no_axis) throw;
  }
  Table::Cell ratio("");
  if (!trim(opt.f).empty()) ratio = Table::Cell(linf_ratio(mask, u, flux_from(opt.f, mask.grid()), opt.q));

  Table t({"center", "class", "rho", "m", "M", "omega", "sigma", "mu", "linf_ratio", "trace_max"});
  for (const auto& x0 : opt.centers) {
    const auto p = oscillation_profile(mask, u, x0, opt.R, opt.levels, has_trace ? &trace : nullptr);
    const auto sig = p.decay_ratios();
    const auto fit = fit_holder(p);
    for (std::size_t j = 0; j < p.scales.size(); ++j) {
      const auto& s = p.scales[j];
      t.add({format_center(x0), to_string(p.cls), s.rho, s.m, s.M, s.omega,
             j == 0 ? Table::Cell("") : Table::Cell(sig[j - 1]), fit.mu, ratio, trace_max});
    }
  }
  return t;
}

}  // namespace sdrift
