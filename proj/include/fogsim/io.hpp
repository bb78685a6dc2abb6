// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogsim/lidar.hpp"
#include "fogsim/scene.hpp"
#include "fogsim/search.hpp"
#include "fogsim/sync.hpp"
#include "fogsim/worldsim.hpp"

namespace fogsim::io {

using json = nlohmann::ordered_json;

// ---- point clouds ----
void write_ply(const std::filesystem::path& path, const lidar::PointCloud& cloud);
void write_cloud_csv(const std::filesystem::path& path, const lidar::PointCloud& cloud);
// debug dump of one ray's response curves
void write_response_csv(const std::filesystem::path& path, const lidar::PulseResponse& hard,
                        const lidar::PulseResponse& soft, const lidar::PulseResponse& total);

// ---- voxel fog grids: "FOGV" header + f64 alphas, x-fastest, little-endian ----
void save_fog_grid(const std::filesystem::path& path, const scene::VoxelGrid& grid);
scene::VoxelGrid load_fog_grid(const std::filesystem::path& path);

// ---- scene snapshot: primitive list + fog field header ----
json scene_to_json(const scene::Scene& sc);

// ---- scenario configs ----
json scenario_to_json(const world::ScenarioConfig& s);
world::ScenarioConfig scenario_from_json(const json& j);  // throws with a diagnostic
world::ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const world::ScenarioConfig& s);

// ---- run artifacts ----
void write_trace_jsonl(const std::filesystem::path& path, const world::RunStats& stats);
json stats_to_json(const world::RunStats& stats);
void write_search_log_jsonl(const std::filesystem::path& path,
                            const std::vector<search::SearchLogEntry>& log);
void write_session_log_jsonl(const std::filesystem::path& path,
                             const std::vector<sync::SessionLogEntry>& log);
void write_session_times_jsonl(const std::filesystem::path& path,
                               const std::vector<sync::SessionLogEntry>& log,
                               const std::vector<double>& wall_times);

std::string fnv_hex(const std::string& text);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fogsim::io
