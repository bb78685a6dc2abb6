// SPDX-License-Identifier: Apache-2.0
#include "fogsim/campaign.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fogsim::campaign {

namespace {

int log_level() {
  const char* v = std::getenv("FOGSIM_LOG");
  return v ? std::atoi(v) : 0;
}

void note(const std::string& msg) {
  if (log_level() > 0) std::cerr << "[fogsim] " << msg << "\n";
}

}  // namespace

Mode mode_from_name(const std::string& s) {
  if (s == "episode") return Mode::kEpisode;
  if (s == "discover") return Mode::kDiscover;
  if (s == "compare") return Mode::kCompare;
  if (s == "scan-only") return Mode::kScanOnly;
  if (s == "sync-demo") return Mode::kSyncDemo;
  throw std::invalid_argument("unknown mode: " + s);
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kEpisode: return "episode";
    case Mode::kDiscover: return "discover";
    case Mode::kCompare: return "compare";
    case Mode::kScanOnly: return "scan-only";
    case Mode::kSyncDemo: return "sync-demo";
  }
  return "?";
}

SyncChoice sync_from_name(const std::string& s) {
  if (s == "off") return SyncChoice::kOff;
  if (s == "inproc") return SyncChoice::kInProc;
  if (s == "socket") return SyncChoice::kSocket;
  throw std::invalid_argument("unknown sync choice: " + s);
}

world::EpisodeSettings settings_from_json(const io::json& j, world::EpisodeSettings base) {
  try {
    base.dt = j.value("dt", base.dt);
    base.max_frames = j.value("max_frames", base.max_frames);
    base.stuck_timeout = j.value("stuck_timeout", base.stuck_timeout);
    if (j.contains("lidar")) {
      const auto& l = j.at("lidar");
      auto& c = base.lidar;
      c.channels = l.value("channels", c.channels);
      c.vertical_fov_min_deg = l.value("vertical_fov_min", c.vertical_fov_min_deg);
      c.vertical_fov_max_deg = l.value("vertical_fov_max", c.vertical_fov_max_deg);
      c.horizontal_resolution_deg = l.value("horizontal_resolution", c.horizontal_resolution_deg);
      c.max_range = l.value("max_range", c.max_range);
      c.range_bin = l.value("range_bin", c.range_bin);
      c.near_field = l.value("near_field", c.near_field);
      c.noise_floor_scale = l.value("noise_floor_scale", c.noise_floor_scale);
      c.p0 = l.value("p0", c.p0);
      c.c_a = l.value("c_a", c.c_a);
      c.tau_h = l.value("tau_h", c.tau_h);
      if (l.contains("mount_height")) c.mount.position.z = l.at("mount_height").get<double>();
    }
    if (j.contains("perception")) {
      const auto& p = j.at("perception");
      auto& c = base.perception;
      c.cell = p.value("cell", c.cell);
      c.min_cluster_size = p.value("min_cluster_size", c.min_cluster_size);
      c.match_radius = p.value("match_radius", c.match_radius);
      c.ground_epsilon = p.value("ground_epsilon", c.ground_epsilon);
      c.perception_range = p.value("perception_range", c.perception_range);
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      auto& c = base.planner;
      c.accel_max = p.value("accel_max", c.accel_max);
      c.decel_max = p.value("decel_max", c.decel_max);
      c.corridor_half_width = p.value("corridor_half_width", c.corridor_half_width);
      c.corridor_standoff = p.value("corridor_standoff", c.corridor_standoff);
    }
    return base;
  } catch (const io::json::exception& e) {
    throw std::invalid_argument(std::string("settings schema error: ") + e.what());
  }
}

CampaignConfig config_from_json(const io::json& j) {
  try {
    CampaignConfig cfg;
    cfg.mode = mode_from_name(j.value("mode", "episode"));
    cfg.out_dir = j.value("out", std::string("out"));
    cfg.master_seed = j.value("seed", 1ull);
    cfg.budget = j.value("budget", 100);
    cfg.repetitions = j.value("repetitions", 1);
    cfg.sync = sync_from_name(j.value("sync", "off"));
    cfg.map_id = j.value("map", "flat-junction");
    for (const auto& f : j.value("factors", io::json::array()))
      cfg.factors.push_back(search::factor_from_name(f.get<std::string>()));
    if (j.contains("scenario")) cfg.scenario = io::scenario_from_json(j.at("scenario"));
    if (j.contains("scenario_path")) cfg.scenario = io::load_scenario(j.at("scenario_path").get<std::string>());
    if (j.contains("mor_list"))
      for (const auto& m : j.at("mor_list"))
        cfg.mor_list.push_back(m.is_null() ? std::numeric_limits<double>::infinity()
                                           : m.get<double>());
    if (j.contains("settings")) cfg.settings = settings_from_json(j.at("settings"), cfg.settings);
    if (j.contains("anneal")) {
      const auto& a = j.at("anneal");
      cfg.anneal.t0 = a.value("t0", cfg.anneal.t0);
      cfg.anneal.r_cool = a.value("r_cool", cfg.anneal.r_cool);
      cfg.anneal.t_min = a.value("t_min", cfg.anneal.t_min);
      cfg.anneal.max_cycle = a.value("max_cycle", cfg.anneal.max_cycle);
      cfg.anneal.max_scenario = a.value("max_scenario", cfg.anneal.max_scenario);
      cfg.anneal.c1 = a.value("c1", cfg.anneal.c1);
      cfg.anneal.c2 = a.value("c2", cfg.anneal.c2);
      cfg.anneal.p_factor = a.value("p_factor", cfg.anneal.p_factor);
    }
    if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
    return cfg;
  } catch (const io::json::exception& e) {
    throw std::invalid_argument(std::string("campaign config schema error: ") + e.what());
  }
}

io::json config_to_json(const CampaignConfig& cfg) {
  io::json j;
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.master_seed;
  j["budget"] = cfg.budget;
  j["repetitions"] = cfg.repetitions;
  j["sync"] = cfg.sync == SyncChoice::kOff ? "off"
              : cfg.sync == SyncChoice::kInProc ? "inproc"
                                                : "socket";
  j["map"] = cfg.map_id;
  io::json factors = io::json::array();
  for (auto f : cfg.factors) factors.push_back(search::factor_name(f));
  j["factors"] = factors;
  if (cfg.scenario) j["scenario"] = io::scenario_to_json(*cfg.scenario);
  io::json mors = io::json::array();
  for (double m : cfg.mor_list) {
    if (std::isinf(m))
      mors.push_back(nullptr);
    else
      mors.push_back(m);
  }
  j["mor_list"] = mors;
  j["anneal"] = {{"t0", cfg.anneal.t0},       {"r_cool", cfg.anneal.r_cool},
                 {"t_min", cfg.anneal.t_min}, {"max_cycle", cfg.anneal.max_cycle},
                 {"c1", cfg.anneal.c1},       {"c2", cfg.anneal.c2},
                 {"p_factor", cfg.anneal.p_factor}};
  return j;
}

namespace {

void write_manifest(const CampaignConfig& cfg, const io::json& extra = {}) {
  io::json j;
  j["tool"] = "fogsim";
  j["version"] = kToolVersion;
  io::json cj = config_to_json(cfg);
  j["config"] = cj;
  j["config_digest"] = io::fnv_hex(cj.dump());
  if (!extra.is_null()) j["run"] = extra;
  io::write_text(cfg.out_dir / "manifest.json", j.dump(2) + "\n");
}

void write_detections_jsonl(const std::filesystem::path& path, const world::RunStats& stats) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  int frame = 0;
  for (const auto& r : stats.trace) {
    io::json j;
    j["frame"] = frame++;
    io::json dets = io::json::array();
    for (const auto& d : r.detections) {
      dets.push_back({{"center", {d.center.x, d.center.y, d.center.z}},
                      {"extent", {d.extent.x, d.extent.y, d.extent.z}},
                      {"points", d.point_count}});
    }
    j["detections"] = dets;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    f << j.dump() << "\n";
  }
}

world::ScenarioConfig apply_mor_override(world::ScenarioConfig s, const CampaignConfig& cfg) {
  if (cfg.mor_list.size() == 1) s.weather.mor = cfg.mor_list[0];
  return s;
}

}  // namespace

world::ScenarioConfig demo_scenario() {
  world::ScenarioConfig s;
  s.map_id = "flat-junction";
  s.ego_start = "W";
  s.ego_end = "E";
  s.ego_target_speed = 12.0;
  world::NpcConfig lead;
  lead.model = "sedan";
  lead.speed = 4.0;
  lead.start = "W";
  lead.end = "E";
  lead.start_offset = 45.0;
  s.npcs.push_back(lead);
  s.weather.mor = 30.0;
  s.weather.sun_altitude_deg = 30.0;
  s.seed = 7;
  return s;
}

int run_episode_mode(const CampaignConfig& cfg) {
  if (!cfg.scenario) throw std::invalid_argument("episode mode needs a scenario");
  world::ScenarioConfig s = apply_mor_override(*cfg.scenario, cfg);
  note("episode on " + s.map_id);
  world::RunStats stats = world::run_episode(s, cfg.settings);
  if (cfg.sync != SyncChoice::kOff) {
    auto transport = cfg.sync == SyncChoice::kInProc ? bridge::Transport::kInProc
                                                     : bridge::Transport::kSocket;
    auto synced = bridge::run_episode_sync(s, cfg.settings, transport);
    io::write_session_log_jsonl(cfg.out_dir / "session.jsonl", synced.session.log);
    io::write_session_times_jsonl(cfg.out_dir / "session.times.jsonl", synced.session.log,
                                  synced.session.wall_times);
    if (!world::runstats_equal(stats, synced.stats)) {
      std::cerr << "sync-mode stats diverged from the direct run\n";
      return kProtocolError;
    }
  }
  write_manifest(cfg, {{"scenario_digest", io::fnv_hex(io::scenario_to_json(s).dump())}});
  io::write_text(cfg.out_dir / "stats.json", io::stats_to_json(stats).dump(2) + "\n");
  io::write_trace_jsonl(cfg.out_dir / "trace.jsonl", stats);
  write_detections_jsonl(cfg.out_dir / "detections.jsonl", stats);
  return kOk;
}

int run_scan_only_mode(const CampaignConfig& cfg) {
  std::vector<double> mors = cfg.mor_list;
  if (mors.empty())
    mors = {std::numeric_limits<double>::infinity(), 200.0, 50.0, 20.0};
  const auto& map = world::RoadMap::get(cfg.map_id);
  scene::Scene sc;
  sc.primitives = map.static_primitives();
  sc.bounds = map.bounds();
  Pose sensor{{0.0, 0.0, cfg.settings.lidar.mount.position.z}, 0.0, 0.0};
  std::string counts = "mor,points,fog_points\n";
  char line[128];
  for (double mor : mors) {
    sc.fog = std::isinf(mor) ? scene::FogField::clear() : scene::FogField::homogeneous_mor(mor);
    lidar::ScanContext ctx(sc.fog, cfg.settings.lidar);
    auto cloud = lidar::scan(sc, ctx, sensor, 0);
    int fog_pts = 0;
    for (const auto& p : cloud.points)
      fog_pts += p.provenance == lidar::Provenance::kFogNoise ? 1 : 0;
    std::string tag = std::isinf(mor) ? "clear" : std::to_string(static_cast<int>(mor)) + "m";
    io::write_ply(cfg.out_dir / ("cloud_" + tag + ".ply"), cloud);
    std::snprintf(line, sizeof line, "%s,%zu,%d\n", tag.c_str(), cloud.points.size(), fog_pts);
    counts += line;
    note("scan " + tag + ": " + std::to_string(cloud.points.size()) + " points");
    if (cfg.response_ray) {
      auto [ch, az] = *cfg.response_ray;
      Vec3 dir = dir_from_angles(deg2rad(az), 0.0);
      Vec3 wdir = sensor.to_world_dir(dir);
      auto hit = scene::raycast(sc, sensor.position, wdir, cfg.settings.lidar.max_range);
      double r0 = hit ? hit->distance : std::numeric_limits<double>::infinity();
      auto prof = scene::fog_profile(sc, sensor.position, wdir, cfg.settings.lidar.max_range);
      lidar::PulseResponse hard;
      if (hit) {
        auto path = scene::path_attenuation_sum(sc, sensor.position, wdir, hit->distance);
        hard = lidar::hard_response(hit->distance, hit->reflectivity, path, cfg.settings.lidar);
      } else {
        hard.samples.resize(static_cast<std::size_t>(cfg.settings.lidar.sample_count()));
        for (int i = 0; i < cfg.settings.lidar.sample_count(); ++i)
          hard.samples[static_cast<std::size_t>(i)] = {cfg.settings.lidar.sample_r(i), 0.0};
      }
      auto soft = lidar::soft_response(prof, r0, cfg.settings.lidar);
      auto total = lidar::total_response(hard, soft);
      io::write_response_csv(cfg.out_dir / ("response_" + tag + ".csv"), hard, soft, total);
    }
  }
  io::write_text(cfg.out_dir / "counts.csv", counts);
  write_manifest(cfg);
  return kOk;
}

int run_sync_demo_mode(const CampaignConfig& cfg) {
  world::ScenarioConfig s = cfg.scenario ? apply_mor_override(*cfg.scenario, cfg) : demo_scenario();
  auto transport = cfg.sync == SyncChoice::kInProc ? bridge::Transport::kInProc
                                                   : bridge::Transport::kSocket;
  note("sync-demo over " + std::string(cfg.sync == SyncChoice::kInProc ? "inproc" : "socket"));
  auto result = bridge::run_episode_sync(s, cfg.settings, transport);
  int shift = world::command_feedback_shift(result.stats, cfg.settings);
  io::write_session_log_jsonl(cfg.out_dir / "session.jsonl", result.session.log);
  io::write_session_times_jsonl(cfg.out_dir / "session.times.jsonl", result.session.log,
                                result.session.wall_times);
  io::json rj;
  rj["r_ads"] = result.ratio.r_ads;
  rj["r_wall"] = result.ratio.r_wall;
  rj["sim_virtual_end"] = result.sim_virtual_end;
  rj["ads_virtual_end"] = result.ads_virtual_end;
  io::write_text(cfg.out_dir / "ratio.json", rj.dump(2) + "\n");
  io::write_text(cfg.out_dir / "alignment.json",
                 io::json{{"command_feedback_shift", shift}}.dump(2) + "\n");
  write_manifest(cfg, {{"scenario_digest", io::fnv_hex(io::scenario_to_json(s).dump())}});
  if (result.ratio.r_ads != 1.0 || shift != 1) {
    std::cerr << "sync demo failed: r_ads=" << result.ratio.r_ads << " shift=" << shift << "\n";
    return kProtocolError;
  }
  return kOk;
}

int run_discover_mode(const CampaignConfig& cfg) {
  search::DiscoverOptions opts;
  opts.map_id = cfg.map_id;
  opts.master_seed = cfg.master_seed;
  opts.anneal = cfg.anneal;
  auto runner = [&](const world::ScenarioConfig& s) { return world::run_episode(s, cfg.settings); };
  note("discover: budget " + std::to_string(cfg.budget));
  auto result = search::discover(cfg.factors, cfg.budget, opts, runner);
  io::write_search_log_jsonl(cfg.out_dir / "search_log.jsonl", result.log);
  int idx = 0;
  for (const auto& c : result.cases) {
    char name[64];
    std::snprintf(name, sizeof name, "case_%04d", idx++);
    io::save_scenario(cfg.out_dir / "cases" / (std::string(name) + ".json"), c.scenario);
    world::RunStats rerun = world::run_episode(c.scenario, cfg.settings);
    io::write_trace_jsonl(cfg.out_dir / "cases" / (std::string(name) + ".trace.jsonl"), rerun);
  }
  io::json summary;
  summary["cases_found"] = result.cases.size();
  summary["episodes_used"] = result.episodes_used;
  summary["budget_exhausted_mid_anneal"] = result.budget_exhausted_mid_anneal;
  summary["pair_space_exhausted"] = result.pair_space_exhausted;
  io::write_text(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  write_manifest(cfg, {{"episodes_used", result.episodes_used}});
  note("discover found " + std::to_string(result.cases.size()) + " cases in " +
       std::to_string(result.episodes_used) + " episodes");
  if (result.pair_space_exhausted && result.episodes_used < cfg.budget) return kIncomplete;
  return kOk;
}

std::vector<CompareRow> run_comparison(const CampaignConfig& cfg) {
  struct Arm {
    std::string name;
    search::FactorSet factors;
    search::AcceptanceMode acceptance;
    search::ObjectiveMode objective;
  };
  search::FactorSet all = cfg.factors;
  if (all.empty())
    all = {search::Factor::kSlowLead, search::Factor::kRoadWater, search::Factor::kSmallTarget,
           search::Factor::kTallVehicle, search::Factor::kSlope};
  std::vector<Arm> arms = {
      {"sa_factor", all, search::AcceptanceMode::kMetropolis, search::ObjectiveMode::kTrue},
      {"sa_random_objective", all, search::AcceptanceMode::kMetropolis,
       search::ObjectiveMode::kRandom},
      {"pure_random", {}, search::AcceptanceMode::kAlwaysAccept, search::ObjectiveMode::kRandom},
  };
  std::vector<CompareRow> rows;
  std::vector<std::vector<int>> counts(arms.size());
  for (int round = 0; round < cfg.repetitions; ++round) {
    // identical initial-scenario seed streams across arms
    std::uint64_t round_seed = hash_mix(cfg.master_seed, static_cast<std::uint64_t>(round));
    for (std::size_t a = 0; a < arms.size(); ++a) {
      search::DiscoverOptions opts;
      opts.map_id = cfg.map_id;
      opts.master_seed = round_seed;
      opts.anneal = cfg.anneal;
      opts.acceptance = arms[a].acceptance;
      opts.objective_mode = arms[a].objective;
      auto runner = [&](const world::ScenarioConfig& s) {
        return world::run_episode(s, cfg.settings);
      };
      auto res = search::discover(arms[a].factors, cfg.budget, opts, runner);
      counts[a].push_back(static_cast<int>(res.cases.size()));
      note("compare round " + std::to_string(round) + " " + arms[a].name + ": " +
           std::to_string(res.cases.size()) + " cases");
      if (!cfg.out_dir.empty())
        io::write_search_log_jsonl(cfg.out_dir / ("log_" + arms[a].name + "_round" +
                                                  std::to_string(round) + ".jsonl"),
                                   res.log);
    }
  }
  for (std::size_t a = 0; a < arms.size(); ++a) {
    double mean = 0.0;
    for (int c : counts[a]) mean += c;
    mean /= static_cast<double>(counts[a].size());
    double var = 0.0;
    for (int c : counts[a]) var += (c - mean) * (c - mean);
    double sd = counts[a].size() > 1 ? std::sqrt(var / (static_cast<double>(counts[a].size()) - 1.0))
                                     : 0.0;
    for (int round = 0; round < cfg.repetitions; ++round)
      rows.push_back({arms[a].name, round, counts[a][static_cast<std::size_t>(round)], mean, sd});
  }
  return rows;
}

int run_compare_mode(const CampaignConfig& cfg) {
  auto rows = run_comparison(cfg);
  std::string csv = "algorithm,round,corner_cases_found,mean,stddev\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%d,%d,%.6g,%.6g\n", r.algorithm.c_str(), r.round,
                  r.corner_cases_found, r.mean, r.stddev);
    csv += line;
  }
  io::write_text(cfg.out_dir / "compare.csv", csv);
  write_manifest(cfg);
  return kOk;
}

int run_campaign(const CampaignConfig& cfg) {
  try {
    switch (cfg.mode) {
      case Mode::kEpisode: return run_episode_mode(cfg);
      case Mode::kScanOnly: return run_scan_only_mode(cfg);
      case Mode::kSyncDemo: return run_sync_demo_mode(cfg);
      case Mode::kDiscover: return run_discover_mode(cfg);
      case Mode::kCompare: return run_compare_mode(cfg);
    }
    return kConfigError;
  } catch (const sync::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kProtocolError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIncomplete;
  }
}

}  // namespace fogsim::campaign
