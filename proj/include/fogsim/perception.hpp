// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fogsim/geom.hpp"
#include "fogsim/lidar.hpp"

namespace fogsim::perception {

struct PerceptionConfig {
  double cell = 0.5;               // clustering grid, m
  int min_cluster_size = 5;
  double match_radius = 2.5;       // m
  double ground_epsilon = 0.3;     // points closer to the ground are dropped
  double perception_range = 60.0;  // truth actors beyond this don't count

  void validate() const;
};

struct Detection {
  Vec3 center;        // world frame, point centroid
  Vec3 extent;        // axis-aligned size
  int point_count = 0;
  double fog_fraction = 0.0;  // share of fog-provenance points in the cluster
};

struct TruthActor {
  std::uint32_t actor_id = 0;
  Vec3 center;  // world frame
  Vec3 extent;
};

struct DetectionScore {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  struct Match {
    int detection = 0;
    std::uint32_t actor_id = 0;
    double range = 0.0;  // truth distance from the sensor, for degradation stats
  };
  std::vector<Match> matches;
};

using GroundFn = std::function<double(double, double)>;

// Grid clustering: drop near-ground points, bin the rest at `cell`, merge
// 26-connected occupied cells, keep clusters meeting min_cluster_size.
std::vector<Detection> cluster(const lidar::PointCloud& cloud, const PerceptionConfig& cfg,
                               const GroundFn& ground_z = {});

// Greedy nearest-center matching within match_radius; pairs are ordered by
// (distance, actor_id, detection center) so the detection list order never
// changes the outcome.
DetectionScore score(const std::vector<Detection>& detections, const std::vector<TruthActor>& truth,
                     const Vec3& sensor_position, const PerceptionConfig& cfg);

struct WeatherSample {
  double road_water = 0.0;     // [0,1]
  double sun_altitude_deg = 45.0;
};

// Synthetic specular-ground false positive (road water at night). Phantom is
// placed 8-15 m ahead of the ego; draw is a pure function of (seed, frame).
std::optional<Detection> road_water_false_positive(const WeatherSample& weather,
                                                   std::uint64_t scenario_seed,
                                                   std::uint64_t frame, const Pose& ego,
                                                   const PerceptionConfig& cfg);

}  // namespace fogsim::perception
