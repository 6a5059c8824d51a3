#pragma once

#include <array>
#include <cmath>

namespace sdrift {

using Vec3 = std::array<double, 3>;

inline constexpr double pi = 3.14159265358979323846;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double axis_distance(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1]); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

/// Volume of the 3D ball of radius r.
inline double ball_volume(double r) { return 4.0 / 3.0 * pi * r * r * r; }

}  // namespace sdrift
