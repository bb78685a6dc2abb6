// SPDX-License-Identifier: Apache-2.0
#include "fogsim/scene.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fogsim::scene {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slab intersection for an axis-aligned box given in a local frame.
std::optional<double> slab_hit(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double tmin = 0.0, tmax = kInf;
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  const double ls[3] = {lo.x, lo.y, lo.z};
  const double hs[3] = {hi.x, hi.y, hi.z};
  for (int i = 0; i < 3; ++i) {
    if (ds[i] == 0.0) {
      if (os[i] < ls[i] || os[i] > hs[i]) return std::nullopt;
      continue;
    }
    double t1 = (ls[i] - os[i]) / ds[i];
    double t2 = (hs[i] - os[i]) / ds[i];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  return tmin;
}

std::optional<double> hit_primitive(const Primitive& p, const Vec3& o, const Vec3& d) {
  switch (p.shape) {
    case Shape::kAxisBox: {
      Vec3 h = p.dims * 0.5;
      return slab_hit(o - p.position, d, -h, h);
    }
    case Shape::kOrientedBox: {
      double c = std::cos(-p.yaw), s = std::sin(-p.yaw);
      Vec3 ro = o - p.position;
      Vec3 lo{ro.x * c - ro.y * s, ro.x * s + ro.y * c, ro.z};
      Vec3 ld{d.x * c - d.y * s, d.x * s + d.y * c, d.z};
      Vec3 h = p.dims * 0.5;
      return slab_hit(lo, ld, -h, h);
    }
    case Shape::kCylinder: {
      double r = p.dims.x, hgt = p.dims.y;
      Vec3 ro = o - p.position;
      // infinite cylinder about z, then clip to [0, hgt]
      double a = d.x * d.x + d.y * d.y;
      double best = kInf;
      if (a > 1e-12) {
        double b = 2.0 * (ro.x * d.x + ro.y * d.y);
        double cq = ro.x * ro.x + ro.y * ro.y - r * r;
        double disc = b * b - 4.0 * a * cq;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
            if (t < 0.0) continue;
            double z = ro.z + t * d.z;
            if (z >= 0.0 && z <= hgt) best = std::min(best, t);
          }
        }
      }
      // caps
      if (std::abs(d.z) > 1e-12) {
        for (double zc : {0.0, hgt}) {
          double t = (zc - ro.z) / d.z;
          if (t < 0.0) continue;
          double x = ro.x + t * d.x, y = ro.y + t * d.y;
          if (x * x + y * y <= r * r) best = std::min(best, t);
        }
      }
      if (best == kInf) return std::nullopt;
      return best;
    }
    case Shape::kGroundPlane: {
      if (std::abs(d.z) < 1e-12) return std::nullopt;
      double t = (p.position.z - o.z) / d.z;
      if (t < 0.0) return std::nullopt;
      return t;
    }
    case Shape::kRamp: {
      // Local frame: +x uphill. Surface z = (rise/length) * (x + length/2),
      // valid for x in [-L/2, L/2], |y| <= W/2, measured from position at the
      // lower-edge surface height.
      double c = std::cos(-p.yaw), s = std::sin(-p.yaw);
      Vec3 ro = o - p.position;
      Vec3 lo{ro.x * c - ro.y * s, ro.x * s + ro.y * c, ro.z};
      Vec3 ld{d.x * c - d.y * s, d.x * s + d.y * c, d.z};
      double L = p.dims.x, W = p.dims.y, rise = p.dims.z;
      double k = rise / L;
      // plane: z - k*(x + L/2) = 0  ->  (lo.z + t*ld.z) = k*(lo.x + t*ld.x + L/2)
      double denom = ld.z - k * ld.x;
      if (std::abs(denom) < 1e-12) return std::nullopt;
      double t = (k * (lo.x + L * 0.5) - lo.z) / denom;
      if (t < 0.0) return std::nullopt;
      double x = lo.x + t * ld.x, y = lo.y + t * ld.y;
      if (x < -L * 0.5 || x > L * 0.5 || std::abs(y) > W * 0.5) return std::nullopt;
      return t;
    }
  }
  return std::nullopt;
}

}  // namespace

void Primitive::validate() const {
  if (reflectivity < 0.0 || reflectivity > 1.0)
    throw std::invalid_argument("primitive reflectivity outside [0,1]");
  auto pos = [](double v) { return v > 0.0; };
  switch (shape) {
    case Shape::kAxisBox:
    case Shape::kOrientedBox:
      if (!pos(dims.x) || !pos(dims.y) || !pos(dims.z))
        throw std::invalid_argument("box extents must be positive");
      break;
    case Shape::kCylinder:
      if (!pos(dims.x) || !pos(dims.y))
        throw std::invalid_argument("cylinder radius/height must be positive");
      break;
    case Shape::kGroundPlane:
      break;
    case Shape::kRamp:
      if (!pos(dims.x) || !pos(dims.y) || !pos(dims.z))
        throw std::invalid_argument("ramp extents must be positive");
      break;
  }
}

FogField FogField::homogeneous_mor(double mor_m) {
  if (!(mor_m > 0.0)) throw std::invalid_argument("MOR must be positive");
  FogField f;
  f.mode = Mode::kHomogeneous;
  f.alpha = std::isinf(mor_m) ? 0.0 : std::log(20.0) / mor_m;
  return f;
}

bool FogField::is_clear() const {
  if (mode == Mode::kHomogeneous) return alpha <= 0.0;
  for (double a : grid.alpha)
    if (a > 0.0) return false;
  return true;
}

void FogField::validate() const {
  if (mode == Mode::kHomogeneous) {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    return;
  }
  if (!(grid.dr > 0.0)) throw std::invalid_argument("voxel edge length must be > 0");
  std::size_t n = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  if (grid.alpha.size() != n) throw std::invalid_argument("voxel grid size mismatch");
  for (double a : grid.alpha)
    if (a < 0.0) throw std::invalid_argument("voxel alpha must be >= 0");
}

void Scene::validate() const {
  fog.validate();
  for (const auto& p : primitives) {
    p.validate();
    if (p.shape == Shape::kGroundPlane) continue;  // infinite extent by design
    if (p.position.x < bounds.lo.x || p.position.x > bounds.hi.x ||
        p.position.y < bounds.lo.y || p.position.y > bounds.hi.y ||
        p.position.z < bounds.lo.z || p.position.z > bounds.hi.z)
      throw std::invalid_argument("primitive outside world bounds");
  }
}

std::optional<Hit> raycast(const Scene& s, const Vec3& origin, const Vec3& direction,
                           double max_range) {
  double n = direction.norm();
  if (std::abs(n - 1.0) > 1e-9) {
    if (n < 1e-12) throw std::invalid_argument("degenerate ray direction");
    throw std::invalid_argument("ray direction must be normalized");
  }
  if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");

  std::optional<Hit> best;
  for (const auto& p : s.primitives) {
    auto t = hit_primitive(p, origin, direction);
    if (!t || *t > max_range) continue;
    Hit h{*t, p.reflectivity, p.actor_id};
    if (!best) {
      best = h;
      continue;
    }
    if (h.distance < best->distance) {
      best = h;
    } else if (h.distance == best->distance) {
      auto key = [](const Hit& x) {
        return x.actor_id ? static_cast<std::int64_t>(*x.actor_id)
                          : std::numeric_limits<std::int64_t>::max();
      };
      if (key(h) < key(*best)) best = h;
    }
  }
  return best;
}

namespace {

// Ray/AABB clip: returns [t0, t1] of the segment inside the box, or nullopt.
std::optional<std::pair<double, double>> clip_to_box(const Vec3& o, const Vec3& d, const Vec3& lo,
                                                     const Vec3& hi, double tmax) {
  double t0 = 0.0, t1 = tmax;
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  const double ls[3] = {lo.x, lo.y, lo.z};
  const double hs[3] = {hi.x, hi.y, hi.z};
  for (int i = 0; i < 3; ++i) {
    if (ds[i] == 0.0) {
      if (os[i] < ls[i] || os[i] > hs[i]) return std::nullopt;
      continue;
    }
    double a = (ls[i] - os[i]) / ds[i];
    double b = (hs[i] - os[i]) / ds[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

// Walk the voxel grid along [t0, t1] of the ray, calling fn(ix, iy, iz, len).
// A ray grazing a voxel face is assigned to the positive-axis side.
template <typename Fn>
void traverse_voxels(const VoxelGrid& g, const Vec3& o, const Vec3& d, double t0, double t1,
                     Fn&& fn) {
  Vec3 p = o + d * t0;
  double fx = (p.x - g.origin.x) / g.dr;
  double fy = (p.y - g.origin.y) / g.dr;
  double fz = (p.z - g.origin.z) / g.dr;
  auto cell = [&](double f, int axis) {
    std::int64_t c = static_cast<std::int64_t>(std::floor(f));
    // grazing a face counts as the positive-axis cell
    if (f == std::floor(f) && d.x * (axis == 0) + d.y * (axis == 1) + d.z * (axis == 2) >= 0.0)
      c = static_cast<std::int64_t>(f);
    return c;
  };
  std::int64_t ix = cell(fx, 0), iy = cell(fy, 1), iz = cell(fz, 2);
  const double dir[3] = {d.x, d.y, d.z};
  std::int64_t idx[3] = {ix, iy, iz};
  std::int64_t step[3];
  double tdelta[3], tnext[3];
  const double orig[3] = {g.origin.x, g.origin.y, g.origin.z};
  const double op[3] = {o.x, o.y, o.z};
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 0.0) {
      step[i] = 1;
      tdelta[i] = g.dr / dir[i];
      tnext[i] = ((idx[i] + 1) * g.dr + orig[i] - op[i]) / dir[i];
    } else if (dir[i] < 0.0) {
      step[i] = -1;
      tdelta[i] = -g.dr / dir[i];
      tnext[i] = (idx[i] * g.dr + orig[i] - op[i]) / dir[i];
    } else {
      step[i] = 0;
      tdelta[i] = kInf;
      tnext[i] = kInf;
    }
  }
  double t = t0;
  while (t < t1) {
    int ax = 0;
    if (tnext[1] < tnext[ax]) ax = 1;
    if (tnext[2] < tnext[ax]) ax = 2;
    double tend = std::min(tnext[ax], t1);
    if (idx[0] >= 0 && idx[1] >= 0 && idx[2] >= 0 &&
        idx[0] < static_cast<std::int64_t>(g.dims[0]) &&
        idx[1] < static_cast<std::int64_t>(g.dims[1]) &&
        idx[2] < static_cast<std::int64_t>(g.dims[2])) {
      double len = tend - t;
      if (len > 0.0)
        fn(static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[1]),
           static_cast<std::uint32_t>(idx[2]), t, tend);
    }
    if (tend >= t1) break;
    t = tend;
    idx[ax] += step[ax];
    tnext[ax] += tdelta[ax];
  }
}

}  // namespace

PathAttenuation path_attenuation_sum(const Scene& s, const Vec3& origin, const Vec3& direction,
                                     double range) {
  if (range < 0.0) throw std::invalid_argument("range must be >= 0");
  PathAttenuation out;
  // clamp to world bounds rather than erroring on long rays
  double r = range;
  auto seg = clip_to_box(origin, direction, s.bounds.lo, s.bounds.hi, range);
  if (!seg) {
    out.clamped = range > 0.0;
    return out;
  }
  if (seg->second < range) {
    r = seg->second;
    out.clamped = true;
  }
  if (s.fog.mode == FogField::Mode::kHomogeneous) {
    out.sum_alpha = s.fog.alpha * r;
    out.dr = 1.0;
    return out;
  }
  // voxel mode: in-voxel path length weighted so constant alpha is exact
  const VoxelGrid& g = s.fog.grid;
  double weighted = 0.0;
  traverse_voxels(g, origin, direction, 0.0, r, [&](std::uint32_t ix, std::uint32_t iy,
                                                    std::uint32_t iz, double t0, double t1) {
    weighted += g.at(ix, iy, iz) * (t1 - t0);
  });
  out.sum_alpha = weighted / g.dr;
  out.dr = g.dr;
  return out;
}

std::vector<double> probe_openness(const Scene& s, const Pose& sensor, int azimuth_sectors,
                                   double max_range) {
  if (azimuth_sectors < 4) throw std::invalid_argument("need at least 4 azimuth sectors");
  std::vector<double> out(static_cast<std::size_t>(azimuth_sectors), max_range);
  // a few rays per sector keeps corner geometry from slipping between probes
  const int rays_per_sector = 3;
  for (int k = 0; k < azimuth_sectors; ++k) {
    double best = max_range;
    for (int j = 0; j < rays_per_sector; ++j) {
      double az = 2.0 * kPi * (k + (j + 0.5) / rays_per_sector) / azimuth_sectors;
      Vec3 dir = sensor.to_world_dir(dir_from_angles(az, 0.0));
      auto h = raycast(s, sensor.position, dir, max_range);
      if (h) best = std::min(best, h->distance);
    }
    out[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

double FogProfile::optical_depth(double r) const {
  if (homogeneous) return alpha0 * r;
  double depth = 0.0, prev = 0.0;
  for (const auto& p : pieces) {
    if (r <= p.r_end) return p.depth_start + p.alpha * (r - prev);
    depth = p.depth_start + p.alpha * (p.r_end - prev);
    prev = p.r_end;
  }
  return depth;
}

double FogProfile::alpha_at(double r) const {
  if (homogeneous) return alpha0;
  double prev = 0.0;
  for (const auto& p : pieces) {
    if (r <= p.r_end && r > prev) return p.alpha;
    prev = p.r_end;
  }
  return 0.0;
}

double FogProfile::beta_at(double r) const {
  if (homogeneous) return beta0;
  double prev = 0.0;
  for (const auto& p : pieces) {
    if (r <= p.r_end && r > prev) return p.beta;
    prev = p.r_end;
  }
  return 0.0;
}

void FogProfile::breakpoints(double lo, double hi, std::vector<double>& out) const {
  if (homogeneous) return;
  for (const auto& p : pieces)
    if (p.r_end > lo && p.r_end < hi) out.push_back(p.r_end);
}

FogProfile fog_profile(const Scene& s, const Vec3& origin, const Vec3& direction, double range) {
  FogProfile prof;
  if (s.fog.mode == FogField::Mode::kHomogeneous) {
    prof.homogeneous = true;
    prof.alpha0 = s.fog.alpha;
    prof.beta0 = s.fog.alpha > 0.0 ? s.fog.beta_from_alpha(s.fog.alpha) : 0.0;
    return prof;
  }
  prof.homogeneous = false;
  auto seg = clip_to_box(origin, direction, s.bounds.lo, s.bounds.hi, range);
  double r1 = seg ? seg->second : 0.0;
  const VoxelGrid& g = s.fog.grid;
  double depth = 0.0, prev = 0.0;
  traverse_voxels(g, origin, direction, 0.0, r1, [&](std::uint32_t ix, std::uint32_t iy,
                                                     std::uint32_t iz, double t0, double t1) {
    double a = g.at(ix, iy, iz);
    if (t0 > prev) {  // gap outside the grid: clear air
      prof.pieces.push_back({t0, 0.0, 0.0, depth});
      prev = t0;
    }
    prof.pieces.push_back({t1, a, a > 0.0 ? s.fog.beta_from_alpha(a) : 0.0, depth});
    depth += a * (t1 - prev);
    prev = t1;
  });
  return prof;
}

}  // namespace fogsim::scene
