#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/fields.hpp"
#include "sdrift/sparse.hpp"

namespace sdrift {

enum class Formulation { direct, weighted };
enum class Scheme { upwind, centered };
enum class FaceMean { geometric, arithmetic };

inline const char* to_string(Formulation f) { return f == Formulation::direct ? "DIRECT" : "WEIGHTED"; }
inline const char* to_string(Scheme s) { return s == Scheme::upwind ? "upwind" : "centered"; }

struct Warning {
  std::string code;
  std::string message;
  double value = 0.0;
};

/// Operator over the interior unknowns. Rows are pointwise (unscaled) so
/// A u approximates the differential operator at the node. Dirichlet values
/// are eliminated into `coupling`, whose columns are grid node indices.
struct DiscreteSystem {
  Formulation formulation = Formulation::direct;
  DomainMask mask;
  DriftSpec drift;
  Scheme scheme = Scheme::upwind;
  FaceMean mean = FaceMean::geometric;
  CsrMatrix A;
  CsrMatrix coupling;
  std::vector<double> rhs;
  std::vector<Warning> warnings;

  bool symmetric() const { return formulation == Formulation::weighted; }
  std::size_t unknowns() const { return A.rows; }
};

/// The Darboux weight |x'|^|alpha|.
inline double darboux_weight(double alpha, const Vec3& x) { return std::pow(axis_distance(x), std::abs(alpha)); }

namespace detail {

using RowEntries = std::vector<std::pair<std::size_t, double>>;

inline void finish_row(DiscreteSystem& sys, RowEntries& row, std::vector<std::pair<std::size_t, double>>& red,
                       std::vector<std::pair<std::size_t, double>>& bnd) {
  red.clear();
  bnd.clear();
  for (const auto& [n, v] : row) {
    const auto a = sys.mask.active_index(n);
    if (a >= 0)
      red.emplace_back(static_cast<std::size_t>(a), v);
    else
      bnd.emplace_back(n, v);
  }
  sys.A.push_row(red);
  sys.coupling.push_row(bnd);
}

// Line integral of psi along the lattice edge starting at corner m (lattice
// units) in direction +axis, by 3-point Gauss-Legendre.
inline double edge_integral(const VectorExpression& psi, const std::array<std::int64_t, 3>& m, int axis, double h) {
  static const double t[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const auto e = static_cast<std::size_t>(axis);
  double s = 0.0;
  for (int q = 0; q < 3; ++q) {
    Vec3 x{static_cast<double>(m[0]) * h, static_cast<double>(m[1]) * h, static_cast<double>(m[2]) * h};
    x[e] = (static_cast<double>(m[e]) + t[q]) * h;
    s += w[q] * psi[e](x);
  }
  return s * h;
}

// Mean normal component of curl psi over the face whose low corner is m and
// normal is +axis, via Stokes on its four edges.
inline double curl_face_flux(const VectorExpression& psi, std::array<std::int64_t, 3> m, int axis, double h) {
  const int b = (axis + 1) % 3, c = (axis + 2) % 3;
  auto shifted = [&](int ax) {
    auto q = m;
    q[static_cast<std::size_t>(ax)] += 1;
    return q;
  };
  const double circ = edge_integral(psi, m, b, h) + edge_integral(psi, shifted(b), c, h) -
                      edge_integral(psi, shifted(c), b, h) - edge_integral(psi, m, c, h);
  return circ / (h * h);
}

// Mean of -alpha x_a/(|x'|^2+eps^2) over the face at x_a = A spanning
// [y0, y1] in the other horizontal coordinate.
inline double axis_face_flux(double alpha, double eps, double A, double y0, double y1, double h) {
  const double c = std::sqrt(A * A + eps * eps);
  if (c == 0.0 || A == 0.0) return 0.0;
  return (-alpha / h) * (A / c) * (std::atan(y1 / c) - std::atan(y0 / c));
}

}  // namespace detail

/// -Lap u + b0 . grad u. The axis drift and the divergence-free part enter in
/// flux form div(beta u) with exact face averages of beta; the point drift
/// enters in advective form.
inline DiscreteSystem assemble_direct(const DomainMask& mask, const DriftSpec& spec, Scheme scheme = Scheme::upwind) {
  spec.validate();
  require(mask.active_count() > 0, Errc::empty_domain, "assemble_direct: empty interior");
  const Grid& g = mask.grid();
  const double h = g.h(), ih2 = 1.0 / (h * h);

  DiscreteSystem sys;
  sys.formulation = Formulation::direct;
  sys.mask = mask;
  sys.drift = spec;
  sys.scheme = scheme;
  sys.A.cols = mask.active_count();
  sys.coupling.cols = g.size();
  sys.rhs.assign(mask.active_count(), 0.0);

  const auto* curl = std::get_if<CurlPotential>(&spec.divfree);
  const bool stokes = curl != nullptr && spec.mollify_radius == 0.0;
  std::optional<VectorField> bnode;
  if (spec.has_divfree() && !stokes) bnode = sample_divfree(mask, spec);
  const bool axis_flux = spec.alpha != 0.0 && spec.singular == Singularity::axis;
  const bool point_adv = spec.alpha != 0.0 && spec.singular == Singularity::point;

  // Flux through the face between node n and n + e_a, positive along +a.
  auto face_flux = [&](std::size_t n, int a) {
    const auto c = g.ijk(n);
    std::array<std::int64_t, 3> m{g.offset()[0] + c[0], g.offset()[1] + c[1], g.offset()[2] + c[2]};
    double f = 0.0;
    if (axis_flux && a < 2) {
      const int o = 1 - a;
      const double A = static_cast<double>(m[static_cast<std::size_t>(a)] + 1) * h;
      const double y0 = static_cast<double>(m[static_cast<std::size_t>(o)]) * h;
      const double y1 = static_cast<double>(m[static_cast<std::size_t>(o)] + 1) * h;
      f += detail::axis_face_flux(spec.alpha, spec.epsilon, A, y0, y1, h);
    }
    if (stokes) {
      auto corner = m;
      corner[static_cast<std::size_t>(a)] += 1;
      f += detail::curl_face_flux(curl->psi, corner, a, h);
    } else if (bnode) {
      const auto ua = static_cast<std::size_t>(a);
      f += 0.5 * ((*bnode)[n][ua] + (*bnode)[n + g.stride(a)][ua]);
    }
    return f;
  };

  double peclet = 0.0;
  detail::RowEntries row, red, bnd;
  for (auto n : mask.active_nodes()) {
    row.clear();
    double diag = 6.0 * ih2;
    for (int a = 0; a < 3; ++a) {
      const std::size_t s = g.stride(a);
      row.emplace_back(n - s, -ih2);
      row.emplace_back(n + s, -ih2);
      if (axis_flux || stokes || bnode) {
        // Outward fluxes through the high and low faces.
        const double out_hi = face_flux(n, a);
        const double out_lo = -face_flux(n - s, a);
        for (const auto& [m, beta] : {std::pair{n + s, out_hi}, std::pair{n - s, out_lo}}) {
          if (scheme == Scheme::upwind) {
            if (beta > 0.0)
              diag += beta / h;
            else
              row.emplace_back(m, beta / h);
          } else {
            diag += 0.5 * beta / h;
            row.emplace_back(m, 0.5 * beta / h);
          }
        }
      }
    }
    if (point_adv || axis_flux || bnode || stokes) {
      Vec3 bsum = point_adv ? singular_drift(spec, g.node(n)) : Vec3{0.0, 0.0, 0.0};
      if (axis_flux) bsum = bsum + singular_drift(spec, g.node(n));
      if (bnode) bsum = bsum + (*bnode)[n];
      if (stokes) bsum = bsum + curl->psi.curl(g.node(n));
      peclet = std::max(peclet, norm(bsum) * h / 2.0);
    }
    if (point_adv) {
      const Vec3 beta = singular_drift(spec, g.node(n));
      for (int a = 0; a < 3; ++a) {
        const std::size_t s = g.stride(a);
        const double b = beta[static_cast<std::size_t>(a)];
        if (scheme == Scheme::upwind) {
          if (b > 0.0) {
            diag += b / h;
            row.emplace_back(n - s, -b / h);
          } else {
            diag -= b / h;
            row.emplace_back(n + s, b / h);
          }
        } else {
          row.emplace_back(n + s, 0.5 * b / h);
          row.emplace_back(n - s, -0.5 * b / h);
        }
      }
    }
    row.emplace_back(n, diag);
    detail::finish_row(sys, row, red, bnd);
  }
  if (scheme == Scheme::centered && peclet > 1.0)
    sys.warnings.push_back({"peclet", "centered convection with cell Peclet number above 1", peclet});
  return sys;
}

/// -div(|x'|^|alpha| grad v) with shared face weights.
inline DiscreteSystem assemble_weighted(const DomainMask& mask, double alpha, FaceMean mean = FaceMean::geometric) {
  require(alpha < 0.0, Errc::invalid_argument, "assemble_weighted: alpha must be negative");
  require(mask.active_count() > 0, Errc::empty_domain, "assemble_weighted: empty interior");
  const Grid& g = mask.grid();
  const double ih2 = 1.0 / (g.h() * g.h());
  DiscreteSystem sys;
  sys.formulation = Formulation::weighted;
  sys.mask = mask;
  sys.drift.alpha = alpha;
  sys.mean = mean;
  sys.A.cols = mask.active_count();
  sys.coupling.cols = g.size();
  sys.rhs.assign(mask.active_count(), 0.0);

  detail::RowEntries row, red, bnd;
  for (auto n : mask.active_nodes()) {
    row.clear();
    const double wn = darboux_weight(alpha, g.node(n));
    double diag = 0.0;
    for (int a = 0; a < 3; ++a)
      for (std::size_t m : {n - g.stride(a), n + g.stride(a)}) {
        const double wm = darboux_weight(alpha, g.node(m));
        const double wf = mean == FaceMean::geometric ? std::sqrt(wn * wm) : 0.5 * (wn + wm);
        diag += wf * ih2;
        row.emplace_back(m, -wf * ih2);
      }
    row.emplace_back(n, diag);
    detail::finish_row(sys, row, red, bnd);
  }
  return sys;
}

/// rhs = -(central div f) at interior nodes, for either formulation.
inline void set_rhs_divergence(DiscreteSystem& sys, const VectorField& f) {
  require(f.grid == sys.mask.grid() && f.size() == sys.mask.grid().size(), Errc::shape_mismatch,
          "set_rhs_divergence: field does not match the grid");
  const auto div = divergence(sys.mask, f);
  const auto& act = sys.mask.active_nodes();
  for (std::size_t i = 0; i < act.size(); ++i) sys.rhs[i] = -div[act[i]];
}

inline void set_rhs_source(DiscreteSystem& sys, const ScalarField& g) {
  require(g.grid == sys.mask.grid() && g.size() == sys.mask.grid().size(), Errc::shape_mismatch,
          "set_rhs_source: field does not match the grid");
  const auto& act = sys.mask.active_nodes();
  for (std::size_t i = 0; i < act.size(); ++i) sys.rhs[i] = g[act[i]];
}

/// Interior values as an unknown vector.
inline std::vector<double> gather(const DomainMask& mask, const ScalarField& u) {
  const auto& act = mask.active_nodes();
  std::vector<double> x(act.size());
  for (std::size_t i = 0; i < act.size(); ++i) x[i] = u[act[i]];
  return x;
}

/// Unknown vector as a field, zero off the interior.
inline ScalarField scatter(const DomainMask& mask, const std::vector<double>& x) {
  ScalarField u(mask.grid());
  const auto& act = mask.active_nodes();
  for (std::size_t i = 0; i < act.size(); ++i) u[act[i]] = x[i];
  return u;
}

/// Operator applied to a full-grid field, boundary values included.
inline std::vector<double> apply_operator(const DiscreteSystem& sys, const ScalarField& u) {
  require(u.grid == sys.mask.grid(), Errc::shape_mismatch, "apply_operator: field does not match the grid");
  auto y = sys.A * gather(sys.mask, u);
  const auto z = sys.coupling * u.v;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += z[i];
  return y;
}

/// Largest |a_ii| - sum_j |a_ij| deficit; <= 0 means weakly diagonally dominant.
inline double diagonal_dominance_deficit(const DiscreteSystem& sys) {
  double worst = -1e300;
  for (std::size_t i = 0; i < sys.A.rows; ++i) {
    double off = 0.0, d = 0.0;
    for (std::size_t p = sys.A.rowptr[i]; p < sys.A.rowptr[i + 1]; ++p) {
      if (sys.A.col[p] == i)
        d = std::abs(sys.A.val[p]);
      else
        off += std::abs(sys.A.val[p]);
    }
    for (std::size_t p = sys.coupling.rowptr[i]; p < sys.coupling.rowptr[i + 1]; ++p) off += std::abs(sys.coupling.val[p]);
    worst = std::max(worst, (off - d) / std::max(d, 1e-300));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Weak form

/// Midpoint quadrature (h^3 per interior node) for the weak-form functionals,
/// with axis line quadrature when the domain meets the axis.
struct WeakFormEvaluator {
  DomainMask mask;
  DriftSpec drift;
  std::optional<AxisSet> axis;
  VectorField b0;

  WeakFormEvaluator(const DomainMask& m, const DriftSpec& d) : mask(m), drift(d) {
    try {
      axis = axis_samples(m);
    } catch (const Error& e) {
      if (e.code() != Errc::no_axis) throw;
    }
    b0 = sample_singular_drift(m, d);
  }

  double cell() const { return mask.grid().cell_volume(); }
  double volume() const { return mask.interior_volume(); }

  double integrate(const ScalarField& f) const {
    double s = 0.0;
    for (auto n : mask.active_nodes()) s += f[n];
    return s * cell();
  }

  /// Axis quadrature of F(u at x'=0), u interpolated from the four nodes.
  template <class F>
  double axis_integral(const ScalarField& u, F&& fn) const {
    require(axis.has_value(), Errc::no_axis, "axis integral: domain does not meet the axis");
    double s = 0.0;
    for (std::size_t i = 0; i < axis->size(); ++i) {
      const auto& q = axis->nodes[i];
      const double v = 0.25 * (u[q[0]] + u[q[1]] + u[q[2]] + u[q[3]]);
      s += axis->weight[i] * fn(v);
    }
    return s;
  }

  double dirichlet_energy(const ScalarField& u) const {
    const Grid& g = mask.grid();
    double s = 0.0;
    for (auto n : mask.active_nodes()) {
      const Vec3 d = gradient_at(g, u, n);
      s += dot(d, d);
    }
    return s * cell();
  }

  double pairing(const VectorField& f, const ScalarField& u) const {
    const Grid& g = mask.grid();
    double s = 0.0;
    for (auto n : mask.active_nodes()) s += dot(f[n], gradient_at(g, u, n));
    return s * cell();
  }
};

/// B[u, eta] = int eta b0 . grad u.
inline double bilinear_form(const WeakFormEvaluator& ev, const ScalarField& u, const ScalarField& eta) {
  const Grid& g = ev.mask.grid();
  require(u.grid == g && eta.grid == g, Errc::shape_mismatch, "bilinear_form: field does not match the grid");
  for (std::size_t n = 0; n < g.size(); ++n)
    if (ev.mask.cls(n) == NodeClass::dirichlet)
      require(eta[n] == 0.0, Errc::invalid_argument, "bilinear_form: test function must vanish on Dirichlet nodes");
  double s = 0.0;
  for (auto n : ev.mask.active_nodes()) s += eta[n] * dot(ev.b0[n], gradient_at(g, u, n));
  return s * ev.cell();
}

/// pi alpha int_Gamma u^2, the limit of B[u,u].
inline double quadratic_form_limit(const WeakFormEvaluator& ev, const ScalarField& u) {
  return pi * ev.drift.alpha * ev.axis_integral(u, [](double v) { return v * v; });
}

struct DeltaGamma {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = int grad h . grad phi with h = ln(1/|x'|); rhs = 2 pi int_Gamma phi.
inline DeltaGamma delta_gamma_check(const WeakFormEvaluator& ev, const ScalarField& phi) {
  const Grid& g = ev.mask.grid();
  require(phi.grid == g, Errc::shape_mismatch, "delta_gamma_check: field does not match the grid");
  DeltaGamma out;
  for (auto n : ev.mask.active_nodes()) {
    const Vec3 x = g.node(n);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const Vec3 gh{-x[0] / r2, -x[1] / r2, 0.0};
    out.lhs += dot(gh, gradient_at(g, phi, n));
  }
  out.lhs *= ev.cell();
  out.rhs = ev.axis ? 2.0 * pi * ev.axis_integral(phi, [](double v) { return v; }) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// System files

inline void write_system(std::ostream& os, const DiscreteSystem& sys) {
  const char magic[8] = {'S', 'D', 'S', 'Y', 'S', '0', '0', '1'};
  os.write(magic, 8);
  const Grid& g = sys.mask.grid();
  detail::put(os, static_cast<std::int32_t>(sys.formulation));
  detail::put(os, static_cast<std::int32_t>(g.n1()));
  detail::put(os, static_cast<std::int32_t>(g.n2()));
  detail::put(os, static_cast<std::int32_t>(g.n3()));
  detail::put(os, g.h());
  for (auto o : g.offset()) detail::put(os, o);
  std::vector<char> cls(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) cls[n] = static_cast<char>(sys.mask.cls(n));
  detail::put_vec(os, cls);
  write_binary(os, sys.A);
  write_binary(os, sys.coupling);
  detail::put_vec(os, sys.rhs);
}

inline DiscreteSystem read_system(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "SDSYS001") throw Error(Errc::parse, "read_system: bad magic");
  DiscreteSystem sys;
  sys.formulation = static_cast<Formulation>(detail::get<std::int32_t>(is));
  const int n1 = detail::get<std::int32_t>(is), n2 = detail::get<std::int32_t>(is), n3 = detail::get<std::int32_t>(is);
  const double h = detail::get<double>(is);
  std::array<std::int64_t, 3> off{};
  for (auto& o : off) o = detail::get<std::int64_t>(is);
  Grid g(n1, n2, n3, h, off);
  const auto cls = detail::get_vec<char>(is);
  require(cls.size() == g.size(), Errc::parse, "read_system: mask size mismatch");
  std::vector<NodeClass> c(cls.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = static_cast<NodeClass>(cls[n]);
  sys.mask = DomainMask(g, std::move(c));
  sys.A = read_binary_csr(is);
  sys.coupling = read_binary_csr(is);
  sys.rhs = detail::get_vec<double>(is);
  require(sys.A.rows == sys.mask.active_count() && sys.rhs.size() == sys.A.rows, Errc::parse,
          "read_system: inconsistent sizes");
  return sys;
}

inline void save_system(const std::string& path, const DiscreteSystem& sys) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot write " + path);
  write_system(os, sys);
}

inline DiscreteSystem load_system(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  return read_system(is);
}

}  // namespace sdrift
