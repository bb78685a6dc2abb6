// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace fogsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm2d() const { return std::sqrt(x * x + y * y); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Sensor/body pose. Yaw about +z, pitch positive nose-up. Roll is not modeled.
struct Pose {
  Vec3 position;
  double yaw = 0.0;    // rad
  double pitch = 0.0;  // rad

  // body frame: x forward, y left, z up
  Vec3 to_world_dir(const Vec3& v) const {
    double cp = std::cos(pitch), sp = std::sin(pitch);
    Vec3 p{v.x * cp - v.z * sp, v.y, v.x * sp + v.z * cp};
    double cy = std::cos(yaw), sy = std::sin(yaw);
    return {p.x * cy - p.y * sy, p.x * sy + p.y * cy, p.z};
  }
  Vec3 to_world(const Vec3& v) const { return position + to_world_dir(v); }
  Vec3 to_body_dir(const Vec3& v) const {
    double cy = std::cos(yaw), sy = std::sin(yaw);
    Vec3 p{v.x * cy + v.y * sy, -v.x * sy + v.y * cy, v.z};
    double cp = std::cos(pitch), sp = std::sin(pitch);
    return {p.x * cp + p.z * sp, p.y, -p.x * sp + p.z * cp};
  }
  Vec3 to_body(const Vec3& v) const { return to_body_dir(v - position); }
};

inline Vec3 dir_from_angles(double azimuth_rad, double elevation_rad) {
  double ce = std::cos(elevation_rad);
  return {ce * std::cos(azimuth_rad), ce * std::sin(azimuth_rad), std::sin(elevation_rad)};
}

inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

inline double smootherstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// 2D oriented rectangle, for footprint collision checks.
struct Obb2 {
  double cx = 0.0, cy = 0.0;
  double yaw = 0.0;
  double half_len = 0.0;  // along heading
  double half_wid = 0.0;

  std::array<std::array<double, 2>, 4> corners() const {
    double c = std::cos(yaw), s = std::sin(yaw);
    std::array<std::array<double, 2>, 4> out{};
    const double ex[4] = {+half_len, +half_len, -half_len, -half_len};
    const double ey[4] = {+half_wid, -half_wid, -half_wid, +half_wid};
    for (int i = 0; i < 4; ++i)
      out[i] = {cx + ex[i] * c - ey[i] * s, cy + ex[i] * s + ey[i] * c};
    return out;
  }
};

// Separating-axis test on the two boxes' edge normals.
inline bool obb2_overlap(const Obb2& a, const Obb2& b) {
  auto ca = a.corners(), cb = b.corners();
  const Obb2* boxes[2] = {&a, &b};
  for (const Obb2* box : boxes) {
    double axes[2][2] = {{std::cos(box->yaw), std::sin(box->yaw)},
                         {-std::sin(box->yaw), std::cos(box->yaw)}};
    for (auto& ax : axes) {
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (auto& p : ca) {
        double t = p[0] * ax[0] + p[1] * ax[1];
        amin = std::min(amin, t);
        amax = std::max(amax, t);
      }
      for (auto& p : cb) {
        double t = p[0] * ax[0] + p[1] * ax[1];
        bmin = std::min(bmin, t);
        bmax = std::max(bmax, t);
      }
      if (amax < bmin || bmax < amin) return false;
    }
  }
  return true;
}

}  // namespace fogsim
