// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fogsim/geom.hpp"
#include "fogsim/scene.hpp"

namespace fogsim::lidar {

// r' sampling grid for the backscatter quadrature. near_field must sit on
// this grid so no quadrature cell straddles the crossover-ramp junction.
inline constexpr double kQuadCell = 1.0 / 64.0;  // m

struct LidarConfig {
  int channels = 16;
  double vertical_fov_min_deg = -15.0;
  double vertical_fov_max_deg = 5.0;
  double horizontal_resolution_deg = 2.0;
  Pose mount{{0.0, 0.0, 1.8}, 0.0, 0.0};  // sensor pose in ego body frame
  double p0 = 1.0;                        // peak pulse power
  double tau_h = 20e-9;                   // half-power pulse width, s
  double c_a = 1.0;                       // system constant
  double max_range = 120.0;               // m
  double range_bin = 0.1;                 // response curve step, m
  double near_field = 1.0;                // crossover ramp length, m
  double noise_floor_scale = 1e-9;        // floor = scale * c_a * p0
  bool raw_argmax = false;                // skip pulse-centroid calibration

  double pulse_extent() const { return kSpeedOfLight * tau_h; }
  double noise_floor() const { return noise_floor_scale * c_a * p0; }
  int azimuth_count() const;
  int sample_count() const;
  double sample_r(int i) const { return (i + 1) * range_bin; }
  void validate() const;
};

struct RaySample {
  double r = 0.0;
  double power = 0.0;
};

struct PulseResponse {
  std::vector<RaySample> samples;  // strictly increasing r, power >= 0
  std::optional<double> r0;        // hard-target distance used, if any
};

enum class Provenance : std::uint8_t { kHardTarget = 0, kFogNoise = 1 };

struct LidarPoint {
  Vec3 position;  // sensor frame
  double intensity = 0.0;
  int channel = 0;
  double azimuth_deg = 0.0;
  Provenance provenance = Provenance::kHardTarget;
  std::optional<std::uint32_t> actor_id;
  std::optional<double> true_range;  // ground-truth R0
};

struct PointCloud {
  std::vector<LidarPoint> points;
  std::uint64_t frame = 0;
  Pose sensor_pose;
};

struct EmitDirection {
  Vec3 dir;  // sensor frame, unit
  int channel = 0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

// Extra labeling select_return attaches to the produced point.
struct RayTag {
  Vec3 dir{1.0, 0.0, 0.0};  // sensor frame
  int channel = 0;
  double azimuth_deg = 0.0;
  std::optional<std::uint32_t> actor_id;
};

std::vector<EmitDirection> emit_directions(const LidarConfig& cfg);

PulseResponse hard_response(double r0, double beta0, const scene::PathAttenuation& path,
                            const LidarConfig& cfg);

// Backscatter response for fog along the ray; r0 is the hard-target distance
// (infinity for sky rays). Contributions beyond the target are cut.
PulseResponse soft_response(const scene::FogProfile& fog, double r0, const LidarConfig& cfg);

PulseResponse total_response(const PulseResponse& hard, const PulseResponse& soft);

std::optional<LidarPoint> select_return(const PulseResponse& total, const LidarConfig& cfg,
                                        double noise_floor, const RayTag& tag = {});

// Per-fog precomputation reused across frames of a scan (the fog field and
// sensor parameters are static within an episode).
class ScanContext {
 public:
  ScanContext(const scene::FogField& fog, const LidarConfig& cfg);

  const LidarConfig& config() const { return cfg_; }
  bool fog_clear() const { return clear_; }
  bool fog_homogeneous() const { return homogeneous_; }

  // quadrature value of the no-target backscatter curve at grid sample i
  double soft_base(int i) const { return soft_base_[static_cast<std::size_t>(i)]; }
  // best (value, sample index) among soft_base[0..i], earliest index on ties
  std::pair<double, int> best_soft_upto(int i) const;

  double soft_sample(double r, double r0_cap) const;  // homogeneous fast path

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  friend PointCloud scan(const scene::Scene&, const ScanContext&, const Pose&, std::uint64_t);
  LidarConfig cfg_;
  bool clear_ = true;
  bool homogeneous_ = true;
  double alpha_ = 0.0, beta_ = 0.0;
  std::vector<double> prefix0_, prefixc_, prefixs_;  // cumulative cell moments
  std::vector<double> soft_base_;
  std::vector<double> best_val_;  // prefix maxima of soft_base_
  std::vector<int> best_idx_;
};

// Full pipeline for one ray: raycast, hard/soft response, peak selection.
std::optional<LidarPoint> trace_single(const scene::Scene& sc, const ScanContext& ctx,
                                       const Pose& sensor_pose, const EmitDirection& ed);

PointCloud scan(const scene::Scene& sc, const ScanContext& ctx, const Pose& sensor_pose,
                std::uint64_t frame = 0);
PointCloud scan(const scene::Scene& sc, const LidarConfig& cfg, const Pose& sensor_pose,
                std::uint64_t frame = 0);
// Chunked multi-threaded sweep; produces clouds identical to the serial scan.
PointCloud scan_parallel(const scene::Scene& sc, const ScanContext& ctx, const Pose& sensor_pose,
                         std::uint64_t frame, int threads);

namespace detail {
// Integrand pieces shared by the response ops; exposed for the unit tests.
double crossover(double r, double near_field);
double soft_point_integrand(double rp, double r_sample, double alpha, double beta,
                            double near_field, double ctau);
double hard_sample(double r, double r0, double beta0, double transmit_sq,
                   const LidarConfig& cfg);
double soft_sample_profile(double r, double r0_cap, const scene::FogProfile& fog,
                           const LidarConfig& cfg);
}  // namespace detail

}  // namespace fogsim::lidar
