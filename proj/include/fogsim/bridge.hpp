// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fogsim/sync.hpp"
#include "fogsim/worldsim.hpp"

namespace fogsim::bridge {

enum class Transport { kInProc, kSocket };

struct SyncEpisodeResult {
  world::RunStats stats;
  sync::SessionResult session;
  sync::RatioReport ratio;
  double sim_virtual_end = 0.0;
  double ads_virtual_end = 0.0;
  double wall_elapsed = 0.0;
};

// Runs the closed loop with the simulator and the ADS stub as two federates
// joined by the RTI. per_frame_delay_s > 0 slows the renderer artificially
// (for wall-clock ratio diagnostics); virtual time is unaffected.
SyncEpisodeResult run_episode_sync(const world::ScenarioConfig& scenario,
                                   const world::EpisodeSettings& settings, Transport transport,
                                   double per_frame_delay_s = 0.0);

// Payload codecs for the DATA frames (little-endian, lossless doubles).
std::vector<std::uint8_t> encode_sensor_frame(const lidar::PointCloud& cloud,
                                              const Pose& ego_pose, double ego_speed);
void decode_sensor_frame(const std::vector<std::uint8_t>& buf, lidar::PointCloud& cloud,
                         Pose& ego_pose, double& ego_speed);
std::vector<std::uint8_t> encode_ads_output(const world::AdsCore::Output& out);
world::AdsCore::Output decode_ads_output(const std::vector<std::uint8_t>& buf);

}  // namespace fogsim::bridge
