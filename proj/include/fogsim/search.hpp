// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fogsim/rng.hpp"
#include "fogsim/worldsim.hpp"

namespace fogsim::search {

// The five safety-critical factors steering seeds and mutations.
enum class Factor { kSlowLead = 1, kRoadWater, kSmallTarget, kTallVehicle, kSlope };
using FactorSet = std::vector<Factor>;

const char* factor_name(Factor f);
Factor factor_from_name(const std::string& name);  // "F1".."F5", throws on junk

struct AnnealConfig {
  double t0 = 1.0;
  double r_cool = 0.8;
  double t_min = 0.05;
  int max_cycle = 10;
  int max_scenario = 1000;
  double c1 = 1.0;
  double c2 = 10.0;      // meters: 1/d_min contributes 1 at 10 m
  double p_factor = 0.5; // chance a mutation is factor-guided
};

// chance that a mutation adds a new NPC; grows with temperature
inline double p_add_npc(double temperature) {
  return std::min(0.5, 0.1 + 0.2 * temperature);
}

struct ObjectiveBreakdown {
  double o = 0.0;
  double perception_term = 0.0;  // c1 * (n_fp + n_fn + n_fog) / n_frame
  double proximity_term = 0.0;   // c2 / d_min
  double c1 = 0.0, c2 = 0.0;
};

// Lower is closer to a corner case. d_min of zero is clamped to the contact
// threshold (the collision flag already captures that outcome).
ObjectiveBreakdown objective(const world::RunStats& stats, double c1, double c2,
                             double contact_threshold = 3.5);

// ego identity: (map, start, end)
using EgoKey = std::tuple<std::string, std::string, std::string>;
using History = std::set<EgoKey>;

class SearchSpaceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

world::ScenarioConfig init_unique_scenario(const History& history, const FactorSet& factors,
                                           const std::string& map_id, Rng& rng);

enum class MutationKind { kAddNpc, kChangeModel, kChangeSpeed, kChangeWeather };
const char* mutation_name(MutationKind k);

struct MutationInfo {
  MutationKind kind = MutationKind::kChangeWeather;
  std::optional<Factor> factor;
};

// One of the four mutation forms; ego route and fog density never change.
world::ScenarioConfig mutate(const world::ScenarioConfig& s, double temperature,
                             const FactorSet& factors, Rng& rng, MutationInfo* info = nullptr);

// Metropolis acceptance for minimization.
bool accept(double o_old, double o_new, double temperature, Rng& rng);

std::string scenario_hash(const world::ScenarioConfig& s);

enum class AcceptanceMode { kMetropolis, kAlwaysAccept };
enum class ObjectiveMode { kTrue, kRandom };

struct DiscoverOptions {
  std::string map_id = "flat-junction";
  std::uint64_t master_seed = 1;
  AnnealConfig anneal;
  AcceptanceMode acceptance = AcceptanceMode::kMetropolis;
  ObjectiveMode objective_mode = ObjectiveMode::kTrue;
  double contact_threshold = 3.5;
};

struct SearchLogEntry {
  int episode = 0;    // global simulation counter
  int iteration = 0;  // outer unique-scenario index
  std::string scenario_hash;
  std::string mutation_kind;  // "init" for the seeding run
  std::string factor_used;
  double o_old = 0.0, o_new = 0.0;
  bool accepted = false;
  double temperature = 0.0;
  bool corner = false;
};

struct CornerCase {
  world::ScenarioConfig scenario;
  std::vector<std::string> provoking_factors;
  std::uint64_t seed = 0;
  int found_at_episode = 0;
  int outer_iteration = 0;
};

using EpisodeRunner = std::function<world::RunStats(const world::ScenarioConfig&)>;

struct DiscoverResult {
  std::vector<CornerCase> cases;
  std::vector<SearchLogEntry> log;
  int episodes_used = 0;
  bool budget_exhausted_mid_anneal = false;
  bool pair_space_exhausted = false;
};

// Corner-case discovery: unique seeds, annealed mutation, factor guidance.
// Every simulation counts against `budget`.
DiscoverResult discover(const FactorSet& factors, int budget, const DiscoverOptions& opts,
                        const EpisodeRunner& run);

}  // namespace fogsim::search
