#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/expression.hpp"
#include "sdrift/vec3.hpp"

namespace sdrift {

struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0) : grid(g), v(g.size(), value) {}
  double& operator[](std::size_t n) { return v[n]; }
  double operator[](std::size_t n) const { return v[n]; }
  std::size_t size() const { return v.size(); }
};

struct VectorField {
  Grid grid;
  std::vector<Vec3> v;

  VectorField() = default;
  explicit VectorField(const Grid& g, Vec3 value = {0.0, 0.0, 0.0}) : grid(g), v(g.size(), value) {}
  Vec3& operator[](std::size_t n) { return v[n]; }
  const Vec3& operator[](std::size_t n) const { return v[n]; }
  std::size_t size() const { return v.size(); }
};

inline ScalarField sample(const Grid& g, const Expression& e) {
  ScalarField out(g);
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = e(g.node(n));
  return out;
}

inline VectorField sample(const Grid& g, const VectorExpression& e) {
  VectorField out(g);
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = e(g.node(n));
  return out;
}

/// Zeroes every node that is not interior.
inline ScalarField restrict_to(const DomainMask& mask, ScalarField f) {
  for (std::size_t n = 0; n < f.size(); ++n)
    if (!mask.interior(n)) f[n] = 0.0;
  return f;
}
inline VectorField restrict_to(const DomainMask& mask, VectorField f) {
  for (std::size_t n = 0; n < f.size(); ++n)
    if (!mask.interior(n)) f[n] = {0.0, 0.0, 0.0};
  return f;
}

inline ScalarField magnitude(const VectorField& f) {
  ScalarField out(f.grid);
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = norm(f[n]);
  return out;
}

// ---------------------------------------------------------------------------
// Drift

struct CurlPotential {
  VectorExpression psi;
};

struct GridSamples {
  VectorField b;
};

enum class Singularity { axis, point };

/// b0 = b - alpha x'/(|x'|^2 + eps^2); with Singularity::point the full x
/// replaces x'.
struct DriftSpec {
  double alpha = 0.0;
  std::variant<std::monostate, CurlPotential, GridSamples> divfree;
  double epsilon = 0.0;
  double mollify_radius = 0.0;
  Singularity singular = Singularity::axis;

  bool has_divfree() const { return !std::holds_alternative<std::monostate>(divfree); }
  void validate() const {
    require(std::isfinite(alpha), Errc::invalid_argument, "drift: alpha must be finite");
    require(epsilon >= 0.0, Errc::invalid_argument, "drift: epsilon must be nonnegative");
    require(mollify_radius >= 0.0, Errc::invalid_argument, "drift: mollify radius must be nonnegative");
  }
};

/// The singular part -alpha x'/(|x'|^2+eps^2) alone.
inline Vec3 singular_drift(const DriftSpec& s, const Vec3& x) {
  if (s.alpha == 0.0) return {0.0, 0.0, 0.0};
  if (s.singular == Singularity::point) {
    const double q = dot(x, x) + s.epsilon * s.epsilon;
    return (-s.alpha / q) * x;
  }
  const double q = x[0] * x[0] + x[1] * x[1] + s.epsilon * s.epsilon;
  return {-s.alpha * x[0] / q, -s.alpha * x[1] / q, 0.0};
}

inline VectorField mollify(const DomainMask& mask, const VectorField& field, double radius);

/// Node samples of the divergence-free part b, mollified when requested.
inline VectorField sample_divfree(const DomainMask& mask, const DriftSpec& s) {
  const Grid& g = mask.grid();
  VectorField b(g);
  if (const auto* c = std::get_if<CurlPotential>(&s.divfree)) {
    for (std::size_t n = 0; n < g.size(); ++n) b[n] = c->psi.curl(g.node(n));
  } else if (const auto* gs = std::get_if<GridSamples>(&s.divfree)) {
    require(gs->b.grid == g && gs->b.size() == g.size(), Errc::shape_mismatch,
            "drift: divergence-free samples do not match the grid");
    for (auto n : mask.active_nodes())
      for (double c : gs->b[n])
        require(std::isfinite(c), Errc::invalid_argument, "drift: divergence-free samples missing on an interior node");
    b = gs->b;
  }
  if (s.mollify_radius > 0.0) b = mollify(mask, b, s.mollify_radius);
  return b;
}

inline VectorField sample_singular_drift(const DomainMask& mask, const DriftSpec& s) {
  s.validate();
  const Grid& g = mask.grid();
  VectorField b0 = sample_divfree(mask, s);
  for (std::size_t n = 0; n < g.size(); ++n) b0[n] = b0[n] + singular_drift(s, g.node(n));
  return b0;
}

/// Central-difference divergence at interior nodes.
inline ScalarField divergence(const DomainMask& mask, const VectorField& f) {
  const Grid& g = mask.grid();
  ScalarField out(g);
  const double inv = 0.5 / g.h();
  for (auto n : mask.active_nodes()) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
      const std::size_t s = g.stride(a);
      d += (f[n + s][static_cast<std::size_t>(a)] - f[n - s][static_cast<std::size_t>(a)]) * inv;
    }
    out[n] = d;
  }
  return out;
}

/// Central-difference gradient at interior nodes.
inline Vec3 gradient_at(const Grid& g, const ScalarField& u, std::size_t n) {
  const double inv = 0.5 / g.h();
  return {(u[n + g.stride(0)] - u[n - g.stride(0)]) * inv, (u[n + g.stride(1)] - u[n - g.stride(1)]) * inv,
          (u[n + g.stride(2)] - u[n - g.stride(2)]) * inv};
}

// ---------------------------------------------------------------------------
// Mollification

struct KernelTap {
  std::array<int, 3> d;
  double w;
};

/// Discrete normalised bump (1 - (|d|/rho)^2)^3 on lattice offsets.
inline std::vector<KernelTap> mollifier_taps(double h, double radius) {
  const int m = static_cast<int>(std::floor(radius / h));
  std::vector<KernelTap> taps;
  double total = 0.0;
  for (int k = -m; k <= m; ++k)
    for (int j = -m; j <= m; ++j)
      for (int i = -m; i <= m; ++i) {
        const double t = (double(i) * i + double(j) * j + double(k) * k) * h * h / (radius * radius);
        if (t >= 1.0) continue;
        const double w = (1.0 - t) * (1.0 - t) * (1.0 - t);
        taps.push_back({{i, j, k}, w});
        total += w;
      }
  for (auto& t : taps) t.w /= total;
  return taps;
}

template <class T>
std::vector<T> convolve(const DomainMask& mask, const std::vector<T>& in, double radius, T zero) {
  const Grid& g = mask.grid();
  const auto taps = mollifier_taps(g.h(), radius);
  std::vector<T> out(g.size(), zero);
  for (auto n : mask.active_nodes()) {
    const auto c = g.ijk(n);
    T acc = zero;
    for (const auto& t : taps) {
      const int i = c[0] + t.d[0], j = c[1] + t.d[1], k = c[2] + t.d[2];
      if (i < 0 || j < 0 || k < 0 || i >= g.n1() || j >= g.n2() || k >= g.n3()) continue;
      const std::size_t q = g.index(i, j, k);
      if (!mask.interior(q)) continue;
      acc = acc + t.w * in[q];
    }
    out[n] = acc;
  }
  return out;
}

inline double domain_diameter(const DomainMask& mask) {
  const Grid& g = mask.grid();
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (auto n : mask.active_nodes()) {
    const Vec3 x = g.node(n);
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
  }
  return norm(hi - lo) + g.h();
}

inline VectorField mollify(const DomainMask& mask, const VectorField& field, double radius) {
  require(radius >= 0.0, Errc::invalid_argument, "mollify: radius must be nonnegative");
  if (radius == 0.0) return field;
  require(radius <= domain_diameter(mask), Errc::invalid_argument, "mollify: radius exceeds domain diameter");
  VectorField out(field.grid);
  out.v = convolve(mask, field.v, radius, Vec3{0.0, 0.0, 0.0});
  return out;
}

inline ScalarField mollify(const DomainMask& mask, const ScalarField& field, double radius) {
  require(radius >= 0.0, Errc::invalid_argument, "mollify: radius must be nonnegative");
  if (radius == 0.0) return field;
  require(radius <= domain_diameter(mask), Errc::invalid_argument, "mollify: radius exceeds domain diameter");
  ScalarField out(field.grid);
  out.v = convolve(mask, field.v, radius, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Norm estimators

enum class NormKind { weak_lp, weak_morrey, morrey, lq };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::weak_lp: return "weak_Lp";
    case NormKind::weak_morrey: return "weak_Morrey";
    case NormKind::morrey: return "Morrey";
    case NormKind::lq: return "Lq";
  }
  return "?";
}

/// strict: |{|f| > s}| at sampled s (lower bound, vanishes for constants).
/// inclusive: the left limit |{|f| >= s}|, the exact sup for node-sampled data.
enum class LevelRule { strict, inclusive };

struct NormReport {
  NormKind kind = NormKind::lq;
  double p = 2.0;
  double lambda = 0.0;
  double value = 0.0;
  Vec3 argmax_center{0.0, 0.0, 0.0};
  double argmax_radius = 0.0;
  std::size_t centers_used = 0;
  std::vector<double> radii_used;
  std::size_t levels_used = 0;
  LevelRule rule = LevelRule::strict;
};

namespace detail {
// sup_s s * (count * cell)^(1/p) over the sampled magnitudes.
inline std::pair<double, std::size_t> weak_sup(std::vector<double> mags, double cell, double p, LevelRule rule) {
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double best = 0.0;
  std::size_t levels = 0;
  std::size_t i = 0;
  while (i < mags.size()) {
    const double s = mags[i];
    std::size_t j = i;
    while (j < mags.size() && mags[j] == s) ++j;
    ++levels;
    const std::size_t count = rule == LevelRule::strict ? i : j;
    if (s > 0.0 && count > 0) best = std::max(best, s * std::pow(static_cast<double>(count) * cell, 1.0 / p));
    i = j;
  }
  return {best, levels};
}
}  // namespace detail

inline NormReport weak_lp_norm(const ScalarField& f, double p, const DomainMask& mask,
                               LevelRule rule = LevelRule::strict) {
  require(p >= 1.0, Errc::invalid_argument, "weak_lp_norm: p must be >= 1");
  require(mask.active_count() > 0, Errc::empty_domain, "weak_lp_norm: empty interior");
  std::vector<double> mags;
  mags.reserve(mask.active_count());
  for (auto n : mask.active_nodes()) mags.push_back(std::abs(f[n]));
  NormReport r;
  r.kind = NormKind::weak_lp;
  r.p = p;
  r.rule = rule;
  std::tie(r.value, r.levels_used) = detail::weak_sup(std::move(mags), mask.grid().cell_volume(), p, rule);
  return r;
}
inline NormReport weak_lp_norm(const VectorField& f, double p, const DomainMask& mask,
                               LevelRule rule = LevelRule::strict) {
  return weak_lp_norm(magnitude(f), p, mask, rule);
}

inline double lq_norm(const ScalarField& f, double q, const DomainMask& mask) {
  require(q >= 1.0, Errc::invalid_argument, "lq_norm: q must be >= 1");
  double s = 0.0;
  for (auto n : mask.active_nodes()) s += std::pow(std::abs(f[n]), q);
  return std::pow(s * mask.grid().cell_volume(), 1.0 / q);
}
inline double lq_norm(const VectorField& f, double q, const DomainMask& mask) { return lq_norm(magnitude(f), q, mask); }

/// Interior nodes within the ball, in index order.
inline std::vector<std::size_t> nodes_in_ball(const DomainMask& mask, const Vec3& c, double r) {
  const Grid& g = mask.grid();
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::max<std::int64_t>(0, g.locate(a, c[a] - r)));
    hi[a] = static_cast<int>(std::min<std::int64_t>(g.n(a) - 1, g.locate(a, c[a] + r)));
  }
  std::vector<std::size_t> out;
  const double r2 = r * r;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        if (!mask.interior(n)) continue;
        const Vec3 d = g.node(n) - c;
        if (dot(d, d) < r2) out.push_back(n);
      }
  return out;
}

/// Dyadic radii r_max, r_max/2, ... down to r_min.
inline std::vector<double> dyadic_radii(double r_max, double r_min) {
  std::vector<double> r;
  for (double x = r_max; x >= r_min; x *= 0.5) r.push_back(x);
  return r;
}

/// Default radius cap: the unit scale, reduced to the diameter on small domains.
inline double morrey_radius_cap(const DomainMask& mask) { return std::min(1.0, domain_diameter(mask)); }

namespace detail {
template <class BallValue>
NormReport morrey_sup(NormKind kind, double p, double lambda, const DomainMask& mask, const std::vector<Vec3>& centers,
                      const std::vector<double>& radii, BallValue&& ball_value) {
  require(p >= 1.0, Errc::invalid_argument, "morrey: p must be >= 1");
  require(!centers.empty(), Errc::invalid_argument, "morrey: no centers");
  require(!radii.empty(), Errc::invalid_argument, "morrey: no radii");
  for (double r : radii) require(r > 0.0, Errc::invalid_argument, "morrey: radii must be positive");
  NormReport rep;
  rep.kind = kind;
  rep.p = p;
  rep.lambda = lambda;
  rep.centers_used = centers.size();
  rep.radii_used = radii;
  bool any = false;
  for (const auto& c : centers)
    for (double r : radii) {
      const auto nodes = nodes_in_ball(mask, c, r);
      if (nodes.empty()) continue;
      any = true;
      const auto [v, levels] = ball_value(nodes);
      rep.levels_used += levels;
      const double val = std::pow(r, -lambda / p) * v;
      if (val > rep.value) {
        rep.value = val;
        rep.argmax_center = c;
        rep.argmax_radius = r;
      }
    }
  require(any, Errc::empty_domain, "morrey: no ball meets the interior");
  return rep;
}
}  // namespace detail

inline NormReport weak_morrey_norm(const ScalarField& f, double p, double lambda, const DomainMask& mask,
                                   const std::vector<Vec3>& centers, const std::vector<double>& radii,
                                   LevelRule rule = LevelRule::strict) {
  const double cell = mask.grid().cell_volume();
  auto rep = detail::morrey_sup(NormKind::weak_morrey, p, lambda, mask, centers, radii,
                                [&](const std::vector<std::size_t>& nodes) {
                                  std::vector<double> mags;
                                  mags.reserve(nodes.size());
                                  for (auto n : nodes) mags.push_back(std::abs(f[n]));
                                  return detail::weak_sup(std::move(mags), cell, p, rule);
                                });
  rep.rule = rule;
  return rep;
}

inline NormReport morrey_norm(const ScalarField& f, double p, double lambda, const DomainMask& mask,
                              const std::vector<Vec3>& centers, const std::vector<double>& radii) {
  const double cell = mask.grid().cell_volume();
  return detail::morrey_sup(NormKind::morrey, p, lambda, mask, centers, radii,
                            [&](const std::vector<std::size_t>& nodes) {
                              double s = 0.0;
                              for (auto n : nodes) s += std::pow(std::abs(f[n]), p);
                              return std::pair<double, std::size_t>{std::pow(s * cell, 1.0 / p), 0};
                            });
}

/// Centres for Morrey estimates: interior nodes on a coarse lattice of the given stride.
inline std::vector<Vec3> lattice_centers(const DomainMask& mask, int stride) {
  require(stride > 0, Errc::invalid_argument, "lattice_centers: stride must be positive");
  const Grid& g = mask.grid();
  std::vector<Vec3> out;
  for (auto n : mask.active_nodes()) {
    const auto c = g.ijk(n);
    bool keep = true;
    for (int a = 0; a < 3; ++a) keep = keep && ((g.offset()[a] + c[a]) % stride + stride) % stride == 0;
    if (keep) out.push_back(g.node(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// I/O

inline std::string format_center(const Vec3& c) {
  std::ostringstream os;
  os << std::setprecision(17) << c[0] << ';' << c[1] << ';' << c[2];
  return os.str();
}

inline void write_norm_csv(std::ostream& os, const std::vector<NormReport>& reports) {
  os << "kind,p,lambda,value,argmax_center,argmax_radius\n" << std::setprecision(17);
  for (const auto& r : reports)
    os << to_string(r.kind) << ',' << r.p << ',' << r.lambda << ',' << r.value << ',' << format_center(r.argmax_center)
       << ',' << r.argmax_radius << '\n';
}

inline void write_field(std::ostream& os, const ScalarField& f) {
  os << "field 1 " << f.size() << '\n' << std::setprecision(17);
  for (double x : f.v) os << x << '\n';
}
inline void write_field(std::ostream& os, const VectorField& f) {
  os << "field 3 " << f.size() << '\n' << std::setprecision(17);
  for (const auto& x : f.v) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
}

/// Reads a field file into flat storage; returns the component count.
inline int read_field_values(std::istream& is, std::vector<double>& values) {
  std::string tag;
  int c = 0;
  std::size_t count = 0;
  if (!(is >> tag >> c >> count) || tag != "field" || (c != 1 && c != 3))
    throw Error(Errc::parse, "read_field: bad header");
  values.resize(count * static_cast<std::size_t>(c));
  for (auto& x : values)
    if (!(is >> x)) throw Error(Errc::parse, "read_field: truncated values");
  return c;
}

inline ScalarField read_scalar_field(std::istream& is, const Grid& g) {
  std::vector<double> vals;
  const int c = read_field_values(is, vals);
  require(c == 1 && vals.size() == g.size(), Errc::shape_mismatch, "read_field: not a scalar field on this grid");
  ScalarField f(g);
  f.v = std::move(vals);
  return f;
}

inline VectorField read_vector_field(std::istream& is, const Grid& g) {
  std::vector<double> vals;
  const int c = read_field_values(is, vals);
  require(c == 3 && vals.size() == 3 * g.size(), Errc::shape_mismatch, "read_field: not a vector field on this grid");
  VectorField f(g);
  for (std::size_t n = 0; n < g.size(); ++n) f[n] = {vals[3 * n], vals[3 * n + 1], vals[3 * n + 2]};
  return f;
}

template <class F>
void save_field(const std::string& path, const F& f) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::io, "cannot write " + path);
  write_field(os, f);
}

inline ScalarField load_scalar_field(const std::string& path, const Grid& g) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  return read_scalar_field(is, g);
}

inline VectorField load_vector_field(const std::string& path, const Grid& g) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  return read_vector_field(is, g);
}

}  // namespace sdrift
