// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fogsim/geom.hpp"

namespace fogsim::scene {

enum class Shape { kAxisBox, kOrientedBox, kCylinder, kGroundPlane, kRamp };

// Analytic primitive. Dimensions by shape:
//   axis/oriented box: dims = full extents (x len, y wid, z hgt), position = center
//   cylinder:          dims.x = radius, dims.y = height, position = base center
//   ground plane:      infinite z = position.z plane, dims unused
//   ramp:              dims = (length, width, rise); surface climbs `rise`
//                      along local +x over `length`, position = center of the
//                      lower edge at surface height
struct Primitive {
  Shape shape = Shape::kAxisBox;
  Vec3 position;
  double yaw = 0.0;  // rad
  Vec3 dims{1.0, 1.0, 1.0};
  double reflectivity = 0.5;
  std::optional<std::uint32_t> actor_id;

  void validate() const;  // throws std::invalid_argument on bad extents/reflectivity
};

struct VoxelGrid {
  std::array<std::uint32_t, 3> dims{0, 0, 0};
  Vec3 origin;
  double dr = 1.0;                 // voxel edge length, m
  std::vector<double> alpha;       // x-fastest order, size dims[0]*dims[1]*dims[2]

  double at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    return alpha[static_cast<std::size_t>(iz) * dims[0] * dims[1] +
                 static_cast<std::size_t>(iy) * dims[0] + ix];
  }
};

struct FogField {
  enum class Mode { kHomogeneous, kVoxelGrid };
  Mode mode = Mode::kHomogeneous;
  double alpha = 0.0;         // 1/m, homogeneous mode; 0 = clear
  VoxelGrid grid;             // voxel mode
  double beta_of_mor = 0.046; // backscatter scale: beta = beta_of_mor / MOR

  static FogField clear() { return FogField{}; }
  static FogField homogeneous_mor(double mor_m);
  bool is_clear() const;
  // beta from a local alpha via beta_of_mor / MOR, MOR = ln20/alpha
  double beta_from_alpha(double a) const { return beta_of_mor * a / std::log(20.0); }
  void validate() const;
};

struct Aabb {
  Vec3 lo{-500.0, -500.0, -50.0};
  Vec3 hi{500.0, 500.0, 200.0};
};

struct Scene {
  std::vector<Primitive> primitives;
  FogField fog;
  Aabb bounds;

  void validate() const;
};

struct Hit {
  double distance = 0.0;     // R0, m
  double reflectivity = 0.0; // beta0
  std::optional<std::uint32_t> actor_id;
};

// Nearest intersection along the ray, first hit only. Ties on distance are
// broken toward the smallest actor_id so that primitive order never matters.
std::optional<Hit> raycast(const Scene& s, const Vec3& origin, const Vec3& direction,
                           double max_range);

// The discretized one-way attenuation sum: T(R) = exp(-dr * sum_alpha).
struct PathAttenuation {
  double sum_alpha = 0.0;  // 1/m times voxel count (voxel mode) or alpha*R (dr=1)
  double dr = 1.0;
  bool clamped = false;    // ray left the world bounds before R

  double optical_depth() const { return sum_alpha * dr; }
  double transmittance() const { return std::exp(-optical_depth()); }
};

PathAttenuation path_attenuation_sum(const Scene& s, const Vec3& origin, const Vec3& direction,
                                     double range);

// Per-azimuth-sector nearest hard-target distance at sensor height, cast in
// the sensor's local horizontal plane. Sector k spans azimuths
// [k, k+1) * 360/sectors deg measured from the sensor's forward axis.
std::vector<double> probe_openness(const Scene& s, const Pose& sensor, int azimuth_sectors,
                                   double max_range);

// Fog sampled along one ray: cumulative optical depth plus local alpha/beta,
// piecewise over voxel crossings. Homogeneous fog has a single piece.
struct FogProfile {
  struct Piece {
    double r_end;       // piece covers (r_start, r_end]
    double alpha;
    double beta;
    double depth_start; // optical depth at the start of the piece
  };
  std::vector<Piece> pieces;  // monotone in r_end; empty = clear air
  bool homogeneous = true;
  double alpha0 = 0.0, beta0 = 0.0;

  double optical_depth(double r) const;
  double alpha_at(double r) const;
  double beta_at(double r) const;
  // voxel-boundary breakpoints within (lo, hi), for quadrature splitting
  void breakpoints(double lo, double hi, std::vector<double>& out) const;
};

FogProfile fog_profile(const Scene& s, const Vec3& origin, const Vec3& direction, double range);

}  // namespace fogsim::scene
