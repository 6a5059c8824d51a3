#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sdrift/error.hpp"
#include "sdrift/vec3.hpp"

namespace sdrift {

// ---------------------------------------------------------------------------
// Shapes

struct Ball {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
};

/// Cylinder around the x3-axis.
struct Cylinder {
  double radius = 1.0;
  double zmin = -1.0;
  double zmax = 1.0;
};

struct Box {
  Vec3 lo{-1.0, -1.0, -1.0};
  Vec3 hi{1.0, 1.0, 1.0};
};

/// Domain {phi < 0} restricted to a bounding box.
struct SignedDistance {
  std::function<double(const Vec3&)> phi;
  Vec3 lo{-1.0, -1.0, -1.0};
  Vec3 hi{1.0, 1.0, 1.0};
};

using Shape = std::variant<Ball, Cylinder, Box, SignedDistance>;

inline bool contains(const Shape& shape, const Vec3& x) {
  struct V {
    const Vec3& x;
    bool operator()(const Ball& s) const { return norm(x - s.center) < s.radius; }
    bool operator()(const Cylinder& s) const {
      return axis_distance(x) < s.radius && x[2] > s.zmin && x[2] < s.zmax;
    }
    bool operator()(const Box& s) const {
      for (int a = 0; a < 3; ++a)
        if (!(x[a] > s.lo[a] && x[a] < s.hi[a])) return false;
      return true;
    }
    bool operator()(const SignedDistance& s) const {
      for (int a = 0; a < 3; ++a)
        if (!(x[a] >= s.lo[a] && x[a] <= s.hi[a])) return false;
      return s.phi(x) < 0.0;
    }
  };
  return std::visit(V{x}, shape);
}

inline std::pair<Vec3, Vec3> bounding_box(const Shape& shape) {
  struct V {
    std::pair<Vec3, Vec3> operator()(const Ball& s) const {
      const Vec3 r{s.radius, s.radius, s.radius};
      return {s.center - r, s.center + r};
    }
    std::pair<Vec3, Vec3> operator()(const Cylinder& s) const {
      return {{-s.radius, -s.radius, s.zmin}, {s.radius, s.radius, s.zmax}};
    }
    std::pair<Vec3, Vec3> operator()(const Box& s) const { return {s.lo, s.hi}; }
    std::pair<Vec3, Vec3> operator()(const SignedDistance& s) const { return {s.lo, s.hi}; }
  };
  return std::visit(V{}, shape);
}

inline std::string describe(const Shape& shape) {
  std::ostringstream os;
  os << std::setprecision(17);
  struct V {
    std::ostringstream& os;
    void operator()(const Ball& s) const {
      os << "ball(" << s.center[0] << "," << s.center[1] << "," << s.center[2] << ";" << s.radius << ")";
    }
    void operator()(const Cylinder& s) const { os << "cylinder(" << s.radius << ";" << s.zmin << "," << s.zmax << ")"; }
    void operator()(const Box& s) const {
      os << "box(" << s.lo[0] << "," << s.lo[1] << "," << s.lo[2] << ";" << s.hi[0] << "," << s.hi[1] << "," << s.hi[2]
         << ")";
    }
    void operator()(const SignedDistance&) const { os << "signed_distance"; }
  };
  std::visit(V{os}, shape);
  return os.str();
}

// ---------------------------------------------------------------------------
// Grid

/// Cell-centred lattice. Node (i,j,k) sits at ((o + i) + 1/2) h per axis with
/// an integer lattice offset o, so mirrored nodes are bitwise mirrored and no
/// node lies on x' = 0.
class Grid {
 public:
  Grid() = default;
  Grid(int n1, int n2, int n3, double h, std::array<std::int64_t, 3> offset)
      : n_{n1, n2, n3}, h_(h), offset_(offset) {
    require(n1 > 0 && n2 > 0 && n3 > 0, Errc::invalid_argument, "grid: cell counts must be positive");
    require(h > 0.0 && std::isfinite(h), Errc::invalid_argument, "grid: spacing must be positive");
  }

  int n1() const { return n_[0]; }
  int n2() const { return n_[1]; }
  int n3() const { return n_[2]; }
  int n(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double h() const { return h_; }
  const std::array<std::int64_t, 3>& offset() const { return offset_; }
  std::size_t size() const { return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2]; }
  std::size_t stride(int axis) const {
    return axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(n_[0]) : static_cast<std::size_t>(n_[0]) * n_[1];
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1]) * k);
  }
  std::array<int, 3> ijk(std::size_t n) const {
    const int i = static_cast<int>(n % n_[0]);
    const std::size_t rest = n / n_[0];
    return {i, static_cast<int>(rest % n_[1]), static_cast<int>(rest / n_[1])};
  }

  /// Coordinate of lattice line m along an axis (grid index i has m = offset + i).
  double coord(std::int64_t m) const { return (static_cast<double>(m) + 0.5) * h_; }
  double coord(int axis, int i) const { return coord(offset_[static_cast<std::size_t>(axis)] + i); }
  Vec3 node(int i, int j, int k) const { return {coord(0, i), coord(1, j), coord(2, k)}; }
  Vec3 node(std::size_t n) const {
    const auto c = ijk(n);
    return node(c[0], c[1], c[2]);
  }
  Vec3 origin() const { return node(0, 0, 0); }

  /// Nearest grid index along an axis for coordinate x (may be out of range).
  std::int64_t locate(int axis, double x) const {
    return static_cast<std::int64_t>(std::floor(x / h_)) - offset_[static_cast<std::size_t>(axis)];
  }

  double cell_volume() const { return h_ * h_ * h_; }

  bool operator==(const Grid& o) const { return n_ == o.n_ && h_ == o.h_ && offset_ == o.offset_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  std::array<int, 3> n_{1, 1, 1};
  double h_ = 1.0;
  std::array<std::int64_t, 3> offset_{0, 0, 0};
};

// ---------------------------------------------------------------------------
// Mask

enum class NodeClass : char { interior = 'I', dirichlet = 'D', exterior = 'E' };

/// Per-node classification plus the compact numbering of interior nodes.
/// Data is shared and immutable once built.
class DomainMask {
 public:
  DomainMask() = default;
  DomainMask(Grid grid, std::vector<NodeClass> cls, std::shared_ptr<const Shape> shape = nullptr)
      : grid_(grid), shape_(std::move(shape)) {
    require(cls.size() == grid.size(), Errc::shape_mismatch, "mask: classification size differs from grid");
    auto d = std::make_shared<Data>();
    d->cls = std::move(cls);
    d->active_index.assign(grid.size(), -1);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (d->cls[n] != NodeClass::interior) continue;
      const auto c = grid.ijk(n);
      for (int a = 0; a < 3; ++a)
        require(c[a] > 0 && c[a] + 1 < grid.n(a), Errc::invalid_argument,
                "mask: interior node on the grid edge has no full stencil");
      d->active_index[n] = static_cast<std::int64_t>(d->active.size());
      d->active.push_back(n);
    }
    data_ = std::move(d);
  }

  const Grid& grid() const { return grid_; }
  const Shape* shape() const { return shape_.get(); }
  std::shared_ptr<const Shape> shape_ptr() const { return shape_; }

  NodeClass cls(std::size_t n) const { return data_->cls[n]; }
  const std::vector<NodeClass>& classes() const { return data_->cls; }
  bool interior(std::size_t n) const { return data_->cls[n] == NodeClass::interior; }
  std::int64_t active_index(std::size_t n) const { return data_->active_index[n]; }
  const std::vector<std::size_t>& active_nodes() const { return data_->active; }
  std::size_t active_count() const { return data_ ? data_->active.size() : 0; }

  std::size_t count(NodeClass c) const { return static_cast<std::size_t>(std::count(data_->cls.begin(), data_->cls.end(), c)); }
  double interior_volume() const { return static_cast<double>(active_count()) * grid_.cell_volume(); }

  bool same_nodes(const DomainMask& o) const { return grid_ == o.grid_ && data_->cls == o.data_->cls; }

 private:
  struct Data {
    std::vector<NodeClass> cls;
    std::vector<std::int64_t> active_index;
    std::vector<std::size_t> active;
  };
  Grid grid_;
  std::shared_ptr<const Data> data_ = std::make_shared<Data>();
  std::shared_ptr<const Shape> shape_;
};

/// Non-interior nodes with an interior face neighbour become Dirichlet nodes.
inline std::vector<NodeClass> classify(const Grid& g, const std::vector<bool>& inside) {
  std::vector<NodeClass> cls(g.size(), NodeClass::exterior);
  for (int k = 0; k < g.n3(); ++k)
    for (int j = 0; j < g.n2(); ++j)
      for (int i = 0; i < g.n1(); ++i) {
        const std::size_t n = g.index(i, j, k);
        const bool edge = i == 0 || j == 0 || k == 0 || i + 1 == g.n1() || j + 1 == g.n2() || k + 1 == g.n3();
        if (inside[n] && !edge) cls[n] = NodeClass::interior;
      }
  for (int k = 0; k < g.n3(); ++k)
    for (int j = 0; j < g.n2(); ++j)
      for (int i = 0; i < g.n1(); ++i) {
        const std::size_t n = g.index(i, j, k);
        if (cls[n] == NodeClass::interior) continue;
        const int c[3] = {i, j, k};
        for (int a = 0; a < 3 && cls[n] != NodeClass::dirichlet; ++a) {
          const std::size_t s = g.stride(a);
          if (c[a] > 0 && cls[n - s] == NodeClass::interior) cls[n] = NodeClass::dirichlet;
          if (c[a] + 1 < g.n(a) && cls[n + s] == NodeClass::interior) cls[n] = NodeClass::dirichlet;
        }
      }
  return cls;
}

struct GridAndMask {
  Grid grid;
  DomainMask mask;
};

inline constexpr std::size_t default_node_budget = 40'000'000;

/// Covers the shape's bounding box with cells of size h plus one halo layer
/// so that every inside node has its full stencil.
inline GridAndMask build_grid(const Shape& shape, double h, std::size_t max_nodes = default_node_budget) {
  require(h > 0.0 && std::isfinite(h), Errc::invalid_argument, "build_grid: h must be positive");
  const auto [lo, hi] = bounding_box(shape);
  std::array<std::int64_t, 3> offset{};
  std::array<int, 3> n{};
  double total = 1.0;
  for (std::size_t a = 0; a < 3; ++a) {
    require(std::isfinite(lo[a]) && std::isfinite(hi[a]) && hi[a] > lo[a], Errc::invalid_argument,
            "build_grid: shape is unbounded or degenerate");
    require(hi[a] - lo[a] >= h, Errc::resolution, "build_grid: grid underflows resolution (side shorter than h)");
    const auto m0 = static_cast<std::int64_t>(std::floor(lo[a] / h));
    const auto m1 = static_cast<std::int64_t>(std::ceil(hi[a] / h)) - 1;
    offset[a] = m0 - 1;
    total *= static_cast<double>(m1 - m0 + 3);
    require(total <= static_cast<double>(max_nodes), Errc::budget, "build_grid: grid exceeds node budget");
    n[a] = static_cast<int>(m1 - m0 + 3);
  }
  Grid g(n[0], n[1], n[2], h, offset);
  std::vector<bool> inside(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) inside[i] = contains(shape, g.node(i));
  auto cls = classify(g, inside);
  DomainMask mask(g, std::move(cls), std::make_shared<const Shape>(shape));
  require(mask.active_count() > 0, Errc::empty_domain, "build_grid: no interior nodes");
  return {g, mask};
}

// ---------------------------------------------------------------------------
// Axis

struct AxisSet {
  /// For each sample: z, line weight and the four nodes around (0,0,z).
  std::vector<double> z;
  std::vector<double> weight;
  std::vector<std::array<std::size_t, 4>> nodes;

  std::size_t size() const { return z.size(); }
  double length() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }
};

/// One sample per lattice z-line whose four axis-adjacent nodes are interior;
/// midpoint weights h.
inline AxisSet axis_samples(const DomainMask& mask) {
  const Grid& g = mask.grid();
  const std::int64_t i0 = -1 - g.offset()[0], j0 = -1 - g.offset()[1];
  AxisSet axis;
  if (i0 < 0 || i0 + 1 >= g.n1() || j0 < 0 || j0 + 1 >= g.n2())
    throw Error(Errc::no_axis, "axis_samples: domain does not meet the x3-axis");
  const int i = static_cast<int>(i0), j = static_cast<int>(j0);
  for (int k = 0; k < g.n3(); ++k) {
    const std::array<std::size_t, 4> q{g.index(i, j, k), g.index(i + 1, j, k), g.index(i, j + 1, k),
                                       g.index(i + 1, j + 1, k)};
    bool ok = true;
    for (auto n : q) ok = ok && mask.interior(n);
    if (!ok) continue;
    axis.z.push_back(g.coord(2, k));
    axis.weight.push_back(g.h());
    axis.nodes.push_back(q);
  }
  if (axis.z.empty()) throw Error(Errc::no_axis, "axis_samples: domain does not meet the x3-axis");
  return axis;
}

// ---------------------------------------------------------------------------
// Erosion

namespace detail {
// Felzenszwalb-Huttenlocher 1D squared distance transform, in place.
// Unreached entries carry a large finite sentinel.
inline void edt_1d(std::vector<double>& f, std::size_t n, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < static_cast<int>(n); ++q) {
    double s = 0.0;
    for (;;) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const double dq = q - v[static_cast<std::size_t>(k)];
    d[q] = dq * dq + f[v[static_cast<std::size_t>(k)]];
  }
  for (std::size_t q = 0; q < n; ++q) f[q] = d[q];
}
}  // namespace detail

/// Squared lattice distance from each node to the nearest non-interior node.
inline std::vector<double> distance_to_exterior_sq(const DomainMask& mask) {
  const Grid& g = mask.grid();
  constexpr double far = 1e18;
  std::vector<double> f(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) f[n] = mask.interior(n) ? far : 0.0;
  const std::size_t nmax = static_cast<std::size_t>(std::max({g.n1(), g.n2(), g.n3()}));
  std::vector<double> line(nmax), d(nmax), z(nmax + 1);
  std::vector<int> v(nmax);
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const std::size_t len = static_cast<std::size_t>(g.n(a));
    for (int q = 0; q < g.n(c); ++q)
      for (int p = 0; p < g.n(b); ++p) {
        std::array<int, 3> idx{};
        idx[b] = p;
        idx[c] = q;
        idx[a] = 0;
        const std::size_t base = g.index(idx[0], idx[1], idx[2]);
        const std::size_t s = g.stride(a);
        for (std::size_t t = 0; t < len; ++t) line[t] = f[base + t * s];
        detail::edt_1d(line, len, d, v, z);
        for (std::size_t t = 0; t < len; ++t) f[base + t * s] = line[t];
      }
  }
  return f;
}

/// Keeps interior nodes farther than eps (Euclidean) from every non-interior node.
inline DomainMask shrink_domain(const DomainMask& mask, double eps) {
  require(eps >= 0.0, Errc::invalid_argument, "shrink_domain: eps must be nonnegative");
  if (eps == 0.0) return mask;
  const Grid& g = mask.grid();
  const auto dist = distance_to_exterior_sq(mask);
  const double lim = (eps / g.h()) * (eps / g.h());
  std::vector<bool> keep(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) keep[n] = mask.interior(n) && dist[n] > lim;
  DomainMask out(g, classify(g, keep), mask.shape_ptr());
  require(out.active_count() > 0, Errc::empty_domain, "shrink_domain: erosion leaves an empty interior");
  return out;
}

struct DomainSequence {
  std::vector<double> offsets;
  std::vector<DomainMask> masks;
};

/// Interior approximations for decreasing offsets; the last member is the full mask.
inline DomainSequence domain_sequence(const DomainMask& mask, std::vector<double> offsets) {
  std::sort(offsets.begin(), offsets.end(), std::greater<>());
  DomainSequence seq;
  for (double e : offsets) {
    require(e > 0.0, Errc::invalid_argument, "domain_sequence: offsets must be positive");
    seq.offsets.push_back(e);
    seq.masks.push_back(shrink_domain(mask, e));
  }
  seq.offsets.push_back(0.0);
  seq.masks.push_back(mask);
  return seq;
}

/// True when every interior node of a is interior in b.
inline bool subset(const DomainMask& a, const DomainMask& b) {
  if (a.grid() != b.grid()) return false;
  for (auto n : a.active_nodes())
    if (!b.interior(n)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_mask(std::ostream& os, const DomainMask& mask) {
  const Grid& g = mask.grid();
  const Vec3 o = g.origin();
  os << std::setprecision(17) << "grid " << g.n1() << ' ' << g.n2() << ' ' << g.n3() << ' ' << g.h() << ' ' << o[0]
     << ' ' << o[1] << ' ' << o[2] << '\n';
  std::string row(static_cast<std::size_t>(g.n1()), ' ');
  for (int k = 0; k < g.n3(); ++k)
    for (int j = 0; j < g.n2(); ++j) {
      for (int i = 0; i < g.n1(); ++i) row[static_cast<std::size_t>(i)] = static_cast<char>(mask.cls(g.index(i, j, k)));
      os << row << '\n';
    }
}

inline DomainMask read_mask(std::istream& is) {
  std::string tag;
  int n1, n2, n3;
  double h;
  Vec3 o;
  if (!(is >> tag >> n1 >> n2 >> n3 >> h >> o[0] >> o[1] >> o[2]) || tag != "grid")
    throw Error(Errc::parse, "read_mask: bad header");
  std::array<std::int64_t, 3> off{};
  for (std::size_t a = 0; a < 3; ++a) off[a] = std::llround(o[a] / h - 0.5);
  Grid g(n1, n2, n3, h, off);
  std::vector<NodeClass> cls;
  cls.reserve(g.size());
  char c;
  while (cls.size() < g.size() && is >> c) {
    if (c != 'I' && c != 'D' && c != 'E') throw Error(Errc::parse, "read_mask: bad class character");
    cls.push_back(static_cast<NodeClass>(c));
  }
  if (cls.size() != g.size()) throw Error(Errc::parse, "read_mask: truncated classification");
  return DomainMask(g, std::move(cls));
}

inline void save_mask(const std::string& path, const DomainMask& mask) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::io, "cannot write " + path);
  write_mask(os, mask);
}

inline DomainMask load_mask(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  return read_mask(is);
}

}  // namespace sdrift
