// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fogsim/bridge.hpp"
#include "fogsim/io.hpp"
#include "fogsim/search.hpp"
#include "fogsim/worldsim.hpp"

namespace fogsim::campaign {

inline constexpr const char* kToolVersion = "0.1.0";

// exit codes
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kProtocolError = 2;
inline constexpr int kIncomplete = 3;

enum class Mode { kEpisode, kDiscover, kCompare, kScanOnly, kSyncDemo };
enum class SyncChoice { kOff, kInProc, kSocket };

Mode mode_from_name(const std::string& s);
const char* mode_name(Mode m);
SyncChoice sync_from_name(const std::string& s);

struct CampaignConfig {
  Mode mode = Mode::kEpisode;
  std::filesystem::path out_dir = "out";
  std::uint64_t master_seed = 1;
  int budget = 100;
  int repetitions = 1;  // rounds for compare mode
  SyncChoice sync = SyncChoice::kOff;
  std::string map_id = "flat-junction";
  search::FactorSet factors;
  std::optional<world::ScenarioConfig> scenario;
  std::vector<double> mor_list;  // scan-only; infinity = clear
  world::EpisodeSettings settings = world::EpisodeSettings::campaign_defaults();
  search::AnnealConfig anneal;
  std::optional<std::pair<int, double>> response_ray;  // (channel, azimuth) debug dump
};

// Parses the campaign config JSON; throws std::invalid_argument with a
// schema diagnostic on malformed input.
CampaignConfig config_from_json(const io::json& j);
io::json config_to_json(const CampaignConfig& cfg);

world::EpisodeSettings settings_from_json(const io::json& j, world::EpisodeSettings base);

// Runs one campaign and writes its artifacts under cfg.out_dir.
// Returns a process exit code.
int run_campaign(const CampaignConfig& cfg);

// Per-mode entry points (used by tests and the acceptance suite).
int run_episode_mode(const CampaignConfig& cfg);
int run_scan_only_mode(const CampaignConfig& cfg);
int run_sync_demo_mode(const CampaignConfig& cfg);
int run_discover_mode(const CampaignConfig& cfg);
int run_compare_mode(const CampaignConfig& cfg);

struct CompareRow {
  std::string algorithm;
  int round = 0;
  int corner_cases_found = 0;
  double mean = 0.0;
  double stddev = 0.0;
};
// The three-arm comparison behind compare mode.
std::vector<CompareRow> run_comparison(const CampaignConfig& cfg);

// A small drivable default used by sync-demo when no scenario is given.
world::ScenarioConfig demo_scenario();

}  // namespace fogsim::campaign
