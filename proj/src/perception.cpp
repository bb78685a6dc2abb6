// SPDX-License-Identifier: Apache-2.0
#include "fogsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "fogsim/rng.hpp"

namespace fogsim::perception {

void PerceptionConfig::validate() const {
  if (!(cell > 0.0)) throw std::invalid_argument("cluster cell must be > 0");
  if (min_cluster_size < 1) throw std::invalid_argument("min_cluster_size must be >= 1");
  if (!(match_radius > 0.0)) throw std::invalid_argument("match_radius must be > 0");
  if (!(perception_range > 0.0)) throw std::invalid_argument("perception_range must be > 0");
}

std::vector<Detection> cluster(const lidar::PointCloud& cloud, const PerceptionConfig& cfg,
                               const GroundFn& ground_z) {
  cfg.validate();
  struct Kept {
    Vec3 world;
    bool fog;
  };
  std::vector<Kept> pts;
  pts.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    Vec3 w = cloud.sensor_pose.to_world(p.position);
    double gz = ground_z ? ground_z(w.x, w.y) : 0.0;
    if (w.z - gz < cfg.ground_epsilon) continue;
    pts.push_back({w, p.provenance == lidar::Provenance::kFogNoise});
  }
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::vector<int>> cells;  // ordered: deterministic traversal
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    Key k{static_cast<std::int64_t>(std::floor(pts[static_cast<std::size_t>(i)].world.x / cfg.cell)),
          static_cast<std::int64_t>(std::floor(pts[static_cast<std::size_t>(i)].world.y / cfg.cell)),
          static_cast<std::int64_t>(std::floor(pts[static_cast<std::size_t>(i)].world.z / cfg.cell))};
    cells[k].push_back(i);
  }
  std::map<Key, int> label;
  int next_label = 0;
  std::vector<std::vector<Key>> groups;
  for (const auto& [key, _] : cells) {
    if (label.count(key)) continue;
    // flood fill over the 26-neighborhood
    std::vector<Key> stack{key};
    label[key] = next_label;
    groups.push_back({});
    while (!stack.empty()) {
      Key cur = stack.back();
      stack.pop_back();
      groups.back().push_back(cur);
      auto [cx, cy, cz] = cur;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            if (!dx && !dy && !dz) continue;
            Key nb{cx + dx, cy + dy, cz + dz};
            if (!cells.count(nb) || label.count(nb)) continue;
            label[nb] = next_label;
            stack.push_back(nb);
          }
    }
    ++next_label;
  }
  std::vector<Detection> out;
  for (auto& grp : groups) {
    std::vector<int> idx;
    for (const auto& k : grp)
      for (int i : cells[k]) idx.push_back(i);
    if (static_cast<int>(idx.size()) < cfg.min_cluster_size) continue;
    std::sort(idx.begin(), idx.end());
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300}, sum;
    int fog = 0;
    for (int i : idx) {
      const Kept& p = pts[static_cast<std::size_t>(i)];
      sum = sum + p.world;
      lo = {std::min(lo.x, p.world.x), std::min(lo.y, p.world.y), std::min(lo.z, p.world.z)};
      hi = {std::max(hi.x, p.world.x), std::max(hi.y, p.world.y), std::max(hi.z, p.world.z)};
      fog += p.fog ? 1 : 0;
    }
    Detection d;
    d.point_count = static_cast<int>(idx.size());
    d.center = sum * (1.0 / d.point_count);
    d.extent = hi - lo;
    d.fog_fraction = static_cast<double>(fog) / d.point_count;
    out.push_back(d);
  }
  return out;
}

DetectionScore score(const std::vector<Detection>& detections, const std::vector<TruthActor>& truth,
                     const Vec3& sensor_position, const PerceptionConfig& cfg) {
  cfg.validate();
  DetectionScore sc;
  std::vector<int> in_range;
  for (int j = 0; j < static_cast<int>(truth.size()); ++j) {
    Vec3 d = truth[static_cast<std::size_t>(j)].center - sensor_position;
    if (d.norm2d() <= cfg.perception_range) in_range.push_back(j);
  }
  struct Pair {
    double dist;
    std::uint32_t actor;
    double cx, cy, cz;
    int det, tj;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
    const auto& det = detections[static_cast<std::size_t>(i)];
    for (int j : in_range) {
      const auto& t = truth[static_cast<std::size_t>(j)];
      Vec3 d = det.center - t.center;
      double dist = d.norm2d();
      if (dist <= cfg.match_radius)
        pairs.push_back({dist, t.actor_id, det.center.x, det.center.y, det.center.z, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.dist, a.actor, a.cx, a.cy, a.cz) <
           std::tie(b.dist, b.actor, b.cx, b.cy, b.cz);
  });
  std::vector<bool> det_used(detections.size(), false), truth_used(truth.size(), false);
  for (const auto& p : pairs) {
    if (det_used[static_cast<std::size_t>(p.det)] || truth_used[static_cast<std::size_t>(p.tj)])
      continue;
    det_used[static_cast<std::size_t>(p.det)] = true;
    truth_used[static_cast<std::size_t>(p.tj)] = true;
    double range = (truth[static_cast<std::size_t>(p.tj)].center - sensor_position).norm2d();
    sc.matches.push_back({p.det, p.actor, range});
    ++sc.true_positives;
  }
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (!det_used[i]) ++sc.false_positives;
  for (int j : in_range)
    if (!truth_used[static_cast<std::size_t>(j)]) ++sc.false_negatives;
  return sc;
}

std::optional<Detection> road_water_false_positive(const WeatherSample& weather,
                                                   std::uint64_t scenario_seed,
                                                   std::uint64_t frame, const Pose& ego,
                                                   const PerceptionConfig& cfg) {
  if (weather.road_water < 0.0 || weather.road_water > 1.0)
    throw std::invalid_argument("road_water outside [0,1]");
  double night_factor = weather.sun_altitude_deg < 0.0 ? 1.0 : 0.2;
  double p = weather.road_water * night_factor;
  Rng rng = derive_rng(scenario_seed, "road-water", frame);
  if (!rng.chance(p)) return std::nullopt;
  double dist = rng.uniform(8.0, 15.0);
  Detection d;
  d.center = ego.position + ego.to_world_dir({1.0, 0.0, 0.0}) * dist;
  d.center.z = ego.position.z + 0.5;
  d.extent = {1.5, 1.5, 1.0};
  d.point_count = cfg.min_cluster_size;
  d.fog_fraction = 0.0;
  return d;
}

}  // namespace fogsim::perception
