#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdrift/assembly.hpp"
#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/expression.hpp"
#include "sdrift/fields.hpp"
#include "sdrift/solver.hpp"

namespace sdrift {

enum class CenterClass { interior_off_axis, on_axis, boundary };

inline const char* to_string(CenterClass c) {
  switch (c) {
    case CenterClass::interior_off_axis: return "INTERIOR_OFF_AXIS";
    case CenterClass::on_axis: return "ON_AXIS";
    case CenterClass::boundary: return "BOUNDARY";
  }
  return "?";
}

struct ScaleStats {
  double rho = 0.0;
  double m = 0.0;
  double M = 0.0;
  double omega = 0.0;
  std::size_t nodes = 0;
};

struct OscillationProfile {
  Vec3 center{0.0, 0.0, 0.0};
  CenterClass cls = CenterClass::interior_off_axis;
  std::vector<ScaleStats> scales;

  /// sigma_j = omega_{j+1} / omega_j; zero oscillation at the coarser scale gives 0.
  std::vector<double> decay_ratios() const {
    std::vector<double> r;
    for (std::size_t j = 0; j + 1 < scales.size(); ++j)
      r.push_back(scales[j].omega > 0.0 ? scales[j + 1].omega / scales[j].omega : 0.0);
    return r;
  }
};

/// Boundary if within h of a non-interior node, else on-axis if |x0'| < h.
inline CenterClass classify_center(const DomainMask& mask, const Vec3& x0) {
  const Grid& g = mask.grid();
  const double h = g.h();
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::max<std::int64_t>(0, g.locate(a, x0[a] - h)));
    hi[a] = static_cast<int>(std::min<std::int64_t>(g.n(a) - 1, g.locate(a, x0[a] + h)));
  }
  bool inside_grid = true;
  for (int a = 0; a < 3; ++a) inside_grid = inside_grid && lo[a] <= hi[a];
  if (!inside_grid) return CenterClass::boundary;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        if (!mask.interior(n) && norm(g.node(n) - x0) <= h) return CenterClass::boundary;
      }
  if (axis_distance(x0) < h) return CenterClass::on_axis;
  return CenterClass::interior_off_axis;
}

/// Point values of u off the node lattice, e.g. the axis trace.
struct TraceSamples {
  std::vector<Vec3> points;
  std::vector<double> values;
};

/// Trace of u = |x'|^|alpha| v on the axis samples: the weight vanishes on
/// the axis, so every value is 0^|alpha| times the interpolated v.
inline TraceSamples darboux_trace(const AxisSet& axis, double alpha, const ScalarField& v) {
  require(alpha < 0.0, Errc::invalid_argument, "darboux_trace: alpha must be negative");
  TraceSamples t;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const auto& q = axis.nodes[i];
    t.points.push_back({0.0, 0.0, axis.z[i]});
    t.values.push_back(std::pow(0.0, std::abs(alpha)) * 0.25 * (v[q[0]] + v[q[1]] + v[q[2]] + v[q[3]]));
  }
  return t;
}

/// Extrema of u over interior nodes in B_{R/4^j}(x0), j = 0..J, together
/// with any supplied trace samples inside the ball.
inline OscillationProfile oscillation_profile(const DomainMask& mask, const ScalarField& u, const Vec3& x0, double R,
                                              int J, const TraceSamples* trace = nullptr) {
  require(R > 0.0, Errc::invalid_argument, "oscillation_profile: R must be positive");
  require(J >= 2, Errc::invalid_argument, "oscillation_profile: need J >= 2");
  const double h = mask.grid().h();
  const double rho_min = R / std::pow(4.0, J);
  require(rho_min >= 4.0 * h * (1.0 - 1e-12), Errc::resolution, "oscillation_profile: smallest radius below 4h");
  OscillationProfile p;
  p.center = x0;
  p.cls = classify_center(mask, x0);
  double rho = R;
  for (int j = 0; j <= J; ++j, rho /= 4.0) {
    const auto nodes = nodes_in_ball(mask, x0, rho);
    require(nodes.size() >= 8 || j < J, Errc::resolution, "oscillation_profile: fewer than 8 nodes in smallest ball");
    require(!nodes.empty(), Errc::empty_domain, "oscillation_profile: ball misses the interior");
    ScaleStats s;
    s.rho = rho;
    s.nodes = nodes.size();
    s.m = std::numeric_limits<double>::infinity();
    s.M = -std::numeric_limits<double>::infinity();
    for (auto n : nodes) {
      s.m = std::min(s.m, u[n]);
      s.M = std::max(s.M, u[n]);
    }
    if (trace)
      for (std::size_t i = 0; i < trace->points.size(); ++i)
        if (norm(trace->points[i] - x0) < rho) {
          s.m = std::min(s.m, trace->values[i]);
          s.M = std::max(s.M, trace->values[i]);
        }
    s.omega = s.M - s.m;
    p.scales.push_back(s);
  }
  return p;
}

struct HolderFit {
  double mu = 1.0;
  double residual = 0.0;
  bool constant = false;
};

/// Least-squares slope of log omega against log rho, clamped to [0, 1].
inline HolderFit fit_holder(const std::vector<double>& rho, const std::vector<double>& omega) {
  require(rho.size() == omega.size(), Errc::shape_mismatch, "fit_holder: size mismatch");
  HolderFit fit;
  if (std::all_of(omega.begin(), omega.end(), [](double w) { return w == 0.0; })) {
    fit.constant = true;
    return fit;
  }
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < rho.size(); ++j)
    if (omega[j] > 0.0) {
      lx.push_back(std::log(rho[j]));
      ly.push_back(std::log(omega[j]));
    }
  require(lx.size() >= 3, Errc::invalid_argument, "fit_holder: need at least 3 scales with positive oscillation");
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  for (std::size_t i = 0; i < lx.size(); ++i) fit.residual = std::max(fit.residual, std::abs(ly[i] - (icpt + slope * lx[i])));
  fit.mu = std::clamp(slope, 0.0, 1.0);
  return fit;
}

inline HolderFit fit_holder(const OscillationProfile& p) {
  std::vector<double> rho, omega;
  for (const auto& s : p.scales) {
    rho.push_back(s.rho);
    omega.push_back(s.omega);
  }
  return fit_holder(rho, omega);
}

/// Least-squares slope of log y against log x (no clamping).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::invalid_argument, "loglog_slope: need two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, Errc::invalid_argument, "loglog_slope: values must be positive");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// L-infinity

inline double max_abs(const DomainMask& mask, const ScalarField& u) {
  double m = 0.0;
  for (auto n : mask.active_nodes()) m = std::max(m, std::abs(u[n]));
  return m;
}

/// max|u| / ||f||_{L_q}.
inline double linf_ratio(const DomainMask& mask, const ScalarField& u, const VectorField& f, double q) {
  require(q > 3.0, Errc::invalid_argument, "linf_ratio: q must exceed 3");
  const double fn = lq_norm(f, q, mask);
  const double um = max_abs(mask, u);
  if (fn == 0.0) {
    require(um == 0.0, Errc::invalid_argument, "linf_ratio: nonzero solution for zero data (non-uniqueness symptom)");
    return 0.0;
  }
  return um / fn;
}

/// (sum over interior nodes of |u|^p + |grad u|^p, times h^3)^(1/p).
inline double w1p_norm(const DomainMask& mask, const ScalarField& u, double p) {
  require(p >= 1.0, Errc::invalid_argument, "w1p_norm: p must be at least 1");
  const Grid& g = mask.grid();
  double s = 0.0;
  for (auto n : mask.active_nodes()) s += std::pow(std::abs(u[n]), p) + std::pow(norm(gradient_at(g, u, n)), p);
  return std::pow(s * g.cell_volume(), 1.0 / p);
}

struct LinfCheck {
  std::vector<double> ratios;
  double spread = 0.0;  // max |r_i / r_0 - 1|
  bool pass = false;
};

/// Stability of the ratio under refinement, relative to the coarsest grid.
inline LinfCheck linf_check(const std::vector<double>& ratios, double tolerance = 0.25) {
  require(ratios.size() >= 2, Errc::invalid_argument, "linf_check: need two or more resolutions");
  LinfCheck c;
  c.ratios = ratios;
  if (ratios[0] == 0.0) {
    c.pass = std::all_of(ratios.begin(), ratios.end(), [](double r) { return r == 0.0; });
    return c;
  }
  for (double r : ratios) c.spread = std::max(c.spread, std::abs(r / ratios[0] - 1.0));
  c.pass = c.spread <= tolerance;
  return c;
}

// ---------------------------------------------------------------------------
// Trace and density

struct TraceResult {
  std::vector<double> values;
  double max_abs = 0.0;
};

/// Bilinear interpolation at x' = 0, which on the symmetric lattice is the
/// mean of the four surrounding nodes.
inline TraceResult trace_on_gamma(const DomainMask& mask, const ScalarField& u, const AxisSet& axis) {
  require(u.grid == mask.grid(), Errc::shape_mismatch, "trace_on_gamma: field does not match the grid");
  TraceResult t;
  for (const auto& q : axis.nodes) {
    for (auto n : q) require(mask.interior(n), Errc::invalid_argument, "trace_on_gamma: axis sample outside the mask");
    const double v = 0.25 * (u[q[0]] + u[q[1]] + u[q[2]] + u[q[3]]);
    t.values.push_back(v);
    t.max_abs = std::max(t.max_abs, std::abs(v));
  }
  return t;
}

/// |{u <= k0} ∩ B_2R(x0)| / |B_2R| with u extended by zero outside the domain.
inline double density_condition(const DomainMask& mask, const ScalarField& u, const Vec3& x0, double R, double k0) {
  const double r = 2.0 * R;
  const auto nodes = nodes_in_ball(mask, x0, r);
  const double cell = mask.grid().cell_volume();
  const double ball = ball_volume(r);
  std::size_t below = 0;
  for (auto n : nodes)
    if (u[n] <= k0) ++below;
  const double outside = std::max(0.0, ball - static_cast<double>(nodes.size()) * cell);
  const double measure = static_cast<double>(below) * cell + (k0 >= 0.0 ? outside : 0.0);
  return std::min(1.0, measure / ball);
}

// ---------------------------------------------------------------------------
// Manufactured solutions

struct StudyRow {
  double h = 0.0;
  std::size_t unknowns = 0;
  double weighted_max = 0.0;
  double weighted_l2 = 0.0;
  double direct_max = 0.0;
  double direct_l2 = 0.0;
  double cross_l2 = 0.0;  // ||u_direct - u_weighted||_2
  double trace_max = 0.0;
  int weighted_iterations = 0;
  int direct_iterations = 0;
};

struct StudyTable {
  std::vector<StudyRow> rows;
  double weighted_l2_rate = 0.0;
  double direct_l2_rate = 0.0;
  double cross_rate = 0.0;
  double trace_rate = 0.0;
};

/// u* = |x'|^|alpha| w and the source g = -Lap u* + b0 . grad u* by forward
/// differentiation.
struct Manufactured {
  double alpha;
  Expression w;

  Jet u(const Vec3& x) const {
    const Jet X = Jet::variable(x[0], 0), Y = Jet::variable(x[1], 1);
    const Jet r = sqrt(X * X + Y * Y);
    return pow(r, std::abs(alpha)) * w.jet(x);
  }
  double exact(const Vec3& x) const { return u(x).v; }
  double source(const Vec3& x) const {
    const Jet j = u(x);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double adv = -alpha * (x[0] * j.d[0] + x[1] * j.d[1]) / r2;
    const double g = -j.laplacian() + adv;
    require(std::isfinite(g), Errc::invalid_argument, "manufactured: source is not finite (expression not differentiable)");
    return g;
  }
};

inline double l2_diff(const DomainMask& mask, const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (auto n : mask.active_nodes()) s += (a[n] - b[n]) * (a[n] - b[n]);
  return std::sqrt(s * mask.grid().cell_volume());
}

inline double max_diff(const DomainMask& mask, const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (auto n : mask.active_nodes()) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

inline StudyRow manufactured_row(const DomainMask& mask, const Manufactured& ms, const KrylovConfig& cg,
                                 const KrylovConfig& bicg, bool run_direct = true) {
  require(ms.alpha < 0.0, Errc::invalid_argument, "manufactured_study: alpha must be negative");
  const Grid& g = mask.grid();
  StudyRow row;
  row.h = g.h();
  row.unknowns = mask.active_count();
  ScalarField src(g), exact(g);
  for (auto n : mask.active_nodes()) {
    const Vec3 x = g.node(n);
    src[n] = ms.source(x);
    exact[n] = ms.exact(x);
  }
  const auto wsol = solve_darboux(mask, ms.alpha, src, cg);
  row.weighted_max = max_diff(mask, wsol.solution, exact);
  row.weighted_l2 = l2_diff(mask, wsol.solution, exact);
  row.weighted_iterations = wsol.iterations;
  row.trace_max = trace_on_gamma(mask, wsol.solution, axis_samples(mask)).max_abs;
  if (run_direct) {
    DriftSpec spec;
    spec.alpha = ms.alpha;
    auto dsys = assemble_direct(mask, spec, Scheme::upwind);
    set_rhs_source(dsys, src);
    KrylovConfig c = bicg;
    c.method = Method::bicgstab;
    const auto dsol = solve_linear(dsys, c);
    row.direct_max = max_diff(mask, dsol.solution, exact);
    row.direct_l2 = l2_diff(mask, dsol.solution, exact);
    row.cross_l2 = l2_diff(mask, dsol.solution, wsol.solution);
    row.direct_iterations = dsol.iterations;
  }
  return row;
}

inline void fill_rates(StudyTable& t) {
  if (t.rows.size() < 2) return;
  std::vector<double> h, we, de, cr, tr;
  for (const auto& r : t.rows) {
    h.push_back(r.h);
    we.push_back(r.weighted_l2);
    de.push_back(r.direct_l2);
    cr.push_back(r.cross_l2);
    tr.push_back(r.trace_max);
  }
  auto rate = [&](const std::vector<double>& e) {
    for (double v : e)
      if (!(v > 0.0)) return 0.0;
    return loglog_slope(h, e);
  };
  t.weighted_l2_rate = rate(we);
  t.direct_l2_rate = rate(de);
  t.cross_rate = rate(cr);
  t.trace_rate = rate(tr);
}

inline StudyTable manufactured_study(const Shape& shape, double alpha, const Expression& w, const std::vector<double>& hs,
                                     const KrylovConfig& cg, const KrylovConfig& bicg, bool run_direct = true) {
  StudyTable t;
  const Manufactured ms{alpha, w};
  for (double h : hs) {
    const auto gm = build_grid(shape, h);
    t.rows.push_back(manufactured_row(gm.mask, ms, cg, bicg, run_direct));
  }
  fill_rates(t);
  return t;
}

}  // namespace sdrift
