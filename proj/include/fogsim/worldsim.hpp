// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fogsim/lidar.hpp"
#include "fogsim/maps.hpp"
#include "fogsim/perception.hpp"
#include "fogsim/scene.hpp"

namespace fogsim::world {

// d_min sentinel when a scenario has no NPCs; keeps 1/d_min near zero.
inline constexpr double kNoNpcDistance = 1e4;

struct WeatherParams {
  double mor = std::numeric_limits<double>::infinity();  // m; inf = clear
  double sun_altitude_deg = 45.0;
  double road_water = 0.0;

  bool clear() const { return std::isinf(mor); }
  void validate() const;
};

struct NpcConfig {
  std::string model;
  double speed = 5.0;  // m/s
  std::string start, end;
  double start_offset = 0.0;  // initial arc position along the route, m
};

struct ScenarioConfig {
  std::string map_id = "flat-junction";
  std::string ego_start, ego_end;
  double ego_target_speed = 10.0;
  std::vector<NpcConfig> npcs;
  WeatherParams weather;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct Command {
  double throttle = 0.0;  // [0,1]
  double brake = 0.0;     // [0,1]
  double steer = 0.0;     // [-1,1]
};

struct FrameRecord {
  double t = 0.0;
  Pose ego;
  double ego_speed = 0.0;
  std::vector<Pose> npc_poses;
  std::vector<perception::Detection> detections;
  Command cmd;
  int fp = 0, fn = 0;
  bool in_fog_noise = false;
};

struct RunStats {
  int n_fp = 0, n_fn = 0, n_fog = 0, n_frame = 0;
  double d_min = kNoNpcDistance;
  bool collided = false;
  bool stuck = false;
  bool route_violation = false;
  bool route_completed = false;
  std::vector<FrameRecord> trace;

  bool corner_case() const { return collided || stuck || route_violation; }
};

struct PlannerConfig {
  double wheelbase = 2.7;
  double accel_max = 3.0;   // m/s^2
  double decel_max = 6.0;   // m/s^2
  double steer_max_deg = 35.0;
  double corridor_half_width = 1.1;  // 2.2 m corridor
  double corridor_standoff = 2.0;    // m past the braking distance
  double lookahead_gain = 0.8;       // s
  double lookahead_min = 4.0, lookahead_max = 12.0;
};

struct EpisodeSettings {
  lidar::LidarConfig lidar;
  perception::PerceptionConfig perception;
  PlannerConfig planner;
  double dt = 0.05;
  int max_frames = 2000;
  double stuck_timeout = 15.0;   // s without stuck_progress meters of progress
  double stuck_progress = 1.0;
  double route_violation_m = 2.0;
  double ego_length = 4.5, ego_width = 1.9;

  // light 900-ray sensor tuned for campaign throughput
  static EpisodeSettings campaign_defaults();
};

struct EgoState {
  Pose pose;
  double speed = 0.0;
  double route_progress = 0.0;
};

// Pure pursuit toward the route plus a full-brake rule on any detection
// inside the forward corridor. Updates ego.route_progress.
Command planner_stub(const std::vector<perception::Detection>& detections, const Route& route,
                     EgoState& ego, double target_speed, const PlannerConfig& pc,
                     double ego_half_length);

// 90th percentile of fog-provenance probe ranges around the sensor.
double fog_noise_radius(const scene::Scene& sc, const lidar::ScanContext& ctx, const Pose& sensor);

class SimCore {
 public:
  SimCore(const ScenarioConfig& scenario, const EpisodeSettings& settings);

  const scene::Scene& render();  // refresh actor primitives, return the scene
  Pose ego_pose() const;
  Pose sensor_pose() const;
  double ego_speed() const { return ego_.speed; }
  double route_length() const { return route_->length(); }
  double route_progress() const { return sim_progress_; }
  std::uint64_t frame() const { return frame_; }
  std::vector<perception::TruthActor> truth() const;

  void step(const Command& cmd, double dt);

  bool collided() const;
  double min_npc_distance() const;  // this frame, 2D centers
  const Route& route() const { return *route_; }
  const RoadMap& map() const { return *map_; }

 private:
  struct NpcState {
    const NpcModel* model;
    const Route* route;
    double s = 0.0;
    double speed = 0.0;
  };
  Pose npc_pose(const NpcState& n) const;

  const ScenarioConfig scenario_;
  const EpisodeSettings settings_;
  const RoadMap* map_;
  const Route* route_;
  EgoState ego_;
  double sim_progress_ = 0.0;
  std::vector<NpcState> npcs_;
  std::uint64_t frame_ = 0;
  scene::Scene scene_;
  std::size_t static_count_ = 0;
};

// The detector + planner side of the loop (the ADS-under-test stub). All of
// its time awareness flows through the `now_s` argument.
class AdsCore {
 public:
  AdsCore(const ScenarioConfig& scenario, const EpisodeSettings& settings);

  struct Output {
    Command cmd;
    std::vector<perception::Detection> detections;
    double route_progress = 0.0;
  };
  Output process(const lidar::PointCloud& cloud, const Pose& ego_pose, double ego_speed,
                 std::uint64_t frame, double now_s);

 private:
  const ScenarioConfig scenario_;
  const EpisodeSettings settings_;
  const RoadMap* map_;
  const Route* route_;
  EgoState ego_;
  double last_now_ = -1.0;
};

// The stack half of the loop: sensor data in, command plus detections out.
// The direct runner binds an in-process AdsCore; the sync bridge routes the
// same exchange through the RTI.
using StackFn = std::function<AdsCore::Output(const lidar::PointCloud&, const Pose& ego_pose,
                                              double ego_speed, std::uint64_t frame)>;

RunStats run_episode_with_stack(const ScenarioConfig& scenario, const EpisodeSettings& settings,
                                const StackFn& stack);

RunStats run_episode(const ScenarioConfig& scenario, const EpisodeSettings& settings);

bool runstats_equal(const RunStats& a, const RunStats& b);

// Alignment between issued commands and the speed feedback in the trace:
// returns the time-step shift at which every frame's kinematics match.
int command_feedback_shift(const RunStats& stats, const EpisodeSettings& settings);

}  // namespace fogsim::world
