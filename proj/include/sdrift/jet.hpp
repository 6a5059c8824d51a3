#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace sdrift {

/// Forward-mode jet in three variables carrying the value, the gradient and
/// the diagonal of the Hessian. The diagonal is all that a Laplacian needs and
/// it propagates exactly through products and scalar functions:
///   (fg)_ii = f_ii g + 2 f_i g_i + f g_ii,   (phi(f))_ii = phi'' f_i^2 + phi' f_ii.
struct Jet {
  double v = 0.0;
  std::array<double, 3> d{};
  std::array<double, 3> dd{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Jet variable(double value, int axis) {
    Jet j(value);
    j.d[static_cast<std::size_t>(axis)] = 1.0;
    return j;
  }

  double laplacian() const { return dd[0] + dd[1] + dd[2]; }
};

namespace detail {
// Apply a scalar function given its value and first two derivatives at a.v.
inline Jet chain(const Jet& a, double f, double f1, double f2) {
  Jet r(f);
  for (std::size_t i = 0; i < 3; ++i) {
    r.d[i] = f1 * a.d[i];
    r.dd[i] = f2 * a.d[i] * a.d[i] + f1 * a.dd[i];
  }
  return r;
}
}  // namespace detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.v + b.v);
  for (std::size_t i = 0; i < 3; ++i) {
    r.d[i] = a.d[i] + b.d[i];
    r.dd[i] = a.dd[i] + b.dd[i];
  }
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r(a.v - b.v);
  for (std::size_t i = 0; i < 3; ++i) {
    r.d[i] = a.d[i] - b.d[i];
    r.dd[i] = a.dd[i] - b.dd[i];
  }
  return r;
}
inline Jet operator-(const Jet& a) { return Jet(0.0) - a; }
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v);
  for (std::size_t i = 0; i < 3; ++i) {
    r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    r.dd[i] = a.dd[i] * b.v + 2.0 * a.d[i] * b.d[i] + a.v * b.dd[i];
  }
  return r;
}
inline Jet operator/(const Jet& a, const Jet& b) {
  const double inv = 1.0 / b.v;
  return a * detail::chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet sin(const Jet& a) { return detail::chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return detail::chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet tan(const Jet& a) {
  const double t = std::tan(a.v);
  const double s = 1.0 + t * t;
  return detail::chain(a, t, s, 2.0 * t * s);
}
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return detail::chain(a, e, e, e);
}
inline Jet log(const Jet& a) { return detail::chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return detail::chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet atan(const Jet& a) {
  const double q = 1.0 / (1.0 + a.v * a.v);
  return detail::chain(a, std::atan(a.v), q, -2.0 * a.v * q * q);
}
inline Jet tanh(const Jet& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;
  return detail::chain(a, t, s, -2.0 * t * s);
}
inline Jet sinh(const Jet& a) { return detail::chain(a, std::sinh(a.v), std::cosh(a.v), std::sinh(a.v)); }
inline Jet cosh(const Jet& a) { return detail::chain(a, std::cosh(a.v), std::sinh(a.v), std::cosh(a.v)); }
inline Jet abs(const Jet& a) { return a.v < 0.0 ? -a : a; }
inline Jet pow(const Jet& a, double p) {
  if (p == 0.0) return Jet(1.0);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  const double f = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return detail::chain(a, f, f1, f2);
}
inline Jet pow(const Jet& a, const Jet& b) {
  const bool constant_exponent = b.d == std::array<double, 3>{} && b.dd == std::array<double, 3>{};
  if (constant_exponent) return pow(a, b.v);
  return exp(b * log(a));
}
inline Jet min(const Jet& a, const Jet& b) { return b.v < a.v ? b : a; }
inline Jet max(const Jet& a, const Jet& b) { return a.v < b.v ? b : a; }

}  // namespace sdrift
