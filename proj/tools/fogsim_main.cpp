// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "fogsim/campaign.hpp"

using namespace fogsim;

int main(int argc, char** argv) {
  CLI::App app{"fogsim: closed-loop LiDAR-in-fog corner-case testbed"};

  std::string config_path, mode, sync = "", scenario_path, out, factors_csv, map_id;
  std::uint64_t seed = 0;
  bool have_seed = false;
  int budget = 0, repetitions = 0;
  double mor = -1.0;
  std::vector<double> response_ray;

  app.add_option("--config", config_path, "campaign config JSON");
  app.add_option("--mode", mode, "episode|discover|compare|scan-only|sync-demo");
  app.add_option("--scenario", scenario_path, "scenario JSON path");
  app.add_option("--budget", budget, "episode budget for discover/compare");
  app.add_option("--repetitions", repetitions, "rounds for compare mode");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { seed = v; have_seed = true; }, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--sync", sync, "off|inproc|socket");
  app.add_option("--mor", mor, "fog visibility override, meters (scan-only/episode)");
  app.add_option("--map", map_id, "map id");
  app.add_option("--factors", factors_csv, "comma list, e.g. F1,F3");
  app.add_option("--response-ray", response_ray, "channel azimuth: dump pulse curves (scan-only)")
      ->expected(2);

  CLI11_PARSE(app, argc, argv);

  try {
    campaign::CampaignConfig cfg;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) {
        std::cerr << "config error: cannot open " << config_path << "\n";
        return campaign::kConfigError;
      }
      io::json j = io::json::parse(f, nullptr, true, true);
      cfg = campaign::config_from_json(j);
    }
    if (!mode.empty()) cfg.mode = campaign::mode_from_name(mode);
    if (!out.empty()) cfg.out_dir = out;
    if (have_seed) cfg.master_seed = seed;
    if (budget > 0) cfg.budget = budget;
    if (repetitions > 0) cfg.repetitions = repetitions;
    if (!sync.empty()) cfg.sync = campaign::sync_from_name(sync);
    if (!map_id.empty()) cfg.map_id = map_id;
    if (!scenario_path.empty()) cfg.scenario = io::load_scenario(scenario_path);
    if (mor > 0.0) cfg.mor_list = {mor};
    if (!factors_csv.empty()) {
      cfg.factors.clear();
      std::string cur;
      for (char c : factors_csv + ",") {
        if (c == ',') {
          if (!cur.empty()) cfg.factors.push_back(search::factor_from_name(cur));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
    }
    if (!response_ray.empty())
      cfg.response_ray = {static_cast<int>(response_ray[0]), response_ray[1]};
    return campaign::run_campaign(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return campaign::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return campaign::kIncomplete;
  }
}
