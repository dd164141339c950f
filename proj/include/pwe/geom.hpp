#pragma once

#include <cmath>

namespace pwe {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  friend constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm2() const { return x * x + y * y + z * z; }

  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? *this / n : *this;
  }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double distance(const Vec3& a, const Vec3& b) { return (b - a).norm(); }

// Mirror reflection of propagation direction d at a surface with unit normal n.
inline Vec3 reflect(const Vec3& d, const Vec3& n) { return d - 2.0 * dot(d, n) * n; }

// Angle between two vectors in [0, pi]; atan2 form keeps precision near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(cross(a, b).norm(), dot(a, b));
}

// Angle from the +z axis (vertical antenna axis) in [0, pi].
inline double polar_angle(const Vec3& d) {
  const double n = d.norm();
  if (n == 0.0) return 0.0;
  double c = d.z / n;
  c = c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
  return std::acos(c);
}

// Distance from point p to the closed segment [a, b].
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.norm2();
  if (len2 == 0.0) return (p - a).norm();
  double t = dot(p - a, ab) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return (p - (a + ab * t)).norm();
}

// Mirror a point across the plane through `origin` with unit normal `n`.
inline Vec3 mirror_point(const Vec3& p, const Vec3& origin, const Vec3& n) {
  return p - 2.0 * dot(p - origin, n) * n;
}

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

// Azimuth/elevation (degrees) of a unit direction: az = atan2(y, x), el = asin(z).
struct AzEl {
  double az_deg = 0.0;
  double el_deg = 0.0;
};

inline AzEl to_azel(const Vec3& d) {
  const Vec3 u = d.normalized();
  double s = u.z;
  s = s > 1.0 ? 1.0 : (s < -1.0 ? -1.0 : s);
  return {rad2deg(std::atan2(u.y, u.x)), rad2deg(std::asin(s))};
}

inline Vec3 from_azel(double az_deg, double el_deg) {
  const double az = deg2rad(az_deg), el = deg2rad(el_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

}  // namespace pwe
