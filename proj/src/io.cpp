// SPDX-License-Identifier: Apache-2.0
#include "fogsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fogsim::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const lidar::PointCloud& cloud) {
  auto f = open_out(path);
  f << "ply\nformat ascii 1.0\n";
  f << "comment frame " << cloud.frame << "\n";
  f << "element vertex " << cloud.points.size() << "\n";
  f << "property double x\nproperty double y\nproperty double z\n";
  f << "property double intensity\nproperty int channel\nproperty uchar provenance\n";
  f << "end_header\n";
  for (const auto& p : cloud.points) {
    f << fmt(p.position.x) << ' ' << fmt(p.position.y) << ' ' << fmt(p.position.z) << ' '
      << fmt(p.intensity) << ' ' << p.channel << ' '
      << static_cast<int>(static_cast<std::uint8_t>(p.provenance)) << "\n";
  }
}

void write_cloud_csv(const std::filesystem::path& path, const lidar::PointCloud& cloud) {
  auto f = open_out(path);
  f << "x,y,z,intensity,channel,provenance\n";
  for (const auto& p : cloud.points) {
    f << fmt(p.position.x) << ',' << fmt(p.position.y) << ',' << fmt(p.position.z) << ','
      << fmt(p.intensity) << ',' << p.channel << ','
      << static_cast<int>(static_cast<std::uint8_t>(p.provenance)) << "\n";
  }
}

void write_response_csv(const std::filesystem::path& path, const lidar::PulseResponse& hard,
                        const lidar::PulseResponse& soft, const lidar::PulseResponse& total) {
  if (hard.samples.size() != soft.samples.size() || soft.samples.size() != total.samples.size())
    throw std::invalid_argument("response grids differ");
  auto f = open_out(path);
  f << "r,p_hard,p_soft,p_total\n";
  for (std::size_t i = 0; i < hard.samples.size(); ++i)
    f << fmt(hard.samples[i].r) << ',' << fmt(hard.samples[i].power) << ','
      << fmt(soft.samples[i].power) << ',' << fmt(total.samples[i].power) << "\n";
}

void save_fog_grid(const std::filesystem::path& path, const scene::VoxelGrid& grid) {
  auto f = open_out(path, true);
  f.write("FOGV", 4);
  auto w32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto w64 = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  for (int i = 0; i < 3; ++i) w32(grid.dims[static_cast<std::size_t>(i)]);
  w64(grid.origin.x);
  w64(grid.origin.y);
  w64(grid.origin.z);
  w64(grid.dr);
  for (double a : grid.alpha) w64(a);
}

scene::VoxelGrid load_fog_grid(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "FOGV", 4) != 0)
    throw std::runtime_error("not a FOGV file: " + path.string());
  scene::VoxelGrid g;
  auto r32 = [&] { std::uint32_t v; f.read(reinterpret_cast<char*>(&v), 4); return v; };
  auto r64 = [&] { double v; f.read(reinterpret_cast<char*>(&v), 8); return v; };
  for (int i = 0; i < 3; ++i) g.dims[static_cast<std::size_t>(i)] = r32();
  g.origin.x = r64();
  g.origin.y = r64();
  g.origin.z = r64();
  g.dr = r64();
  std::size_t n = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
  g.alpha.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.alpha[i] = r64();
  if (!f) throw std::runtime_error("truncated FOGV file: " + path.string());
  return g;
}

namespace {

const char* shape_name(scene::Shape s) {
  switch (s) {
    case scene::Shape::kAxisBox: return "axis-box";
    case scene::Shape::kOrientedBox: return "oriented-box";
    case scene::Shape::kCylinder: return "cylinder";
    case scene::Shape::kGroundPlane: return "ground-plane";
    case scene::Shape::kRamp: return "ramp";
  }
  return "?";
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

json scene_to_json(const scene::Scene& sc) {
  json j;
  json prims = json::array();
  for (const auto& p : sc.primitives) {
    json pj;
    pj["shape"] = shape_name(p.shape);
    pj["position"] = vec_to_json(p.position);
    pj["yaw"] = p.yaw;
    pj["dims"] = vec_to_json(p.dims);
    pj["reflectivity"] = p.reflectivity;
    if (p.actor_id) pj["actor_id"] = *p.actor_id;
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  json fog;
  if (sc.fog.mode == scene::FogField::Mode::kHomogeneous) {
    fog["mode"] = "homogeneous";
    fog["alpha"] = sc.fog.alpha;
  } else {
    fog["mode"] = "voxel-grid";
    fog["dims"] = json::array({sc.fog.grid.dims[0], sc.fog.grid.dims[1], sc.fog.grid.dims[2]});
    fog["origin"] = vec_to_json(sc.fog.grid.origin);
    fog["dr"] = sc.fog.grid.dr;
  }
  fog["beta_of_mor"] = sc.fog.beta_of_mor;
  j["fog"] = fog;
  j["bounds"] = {{"lo", vec_to_json(sc.bounds.lo)}, {"hi", vec_to_json(sc.bounds.hi)}};
  return j;
}

json scenario_to_json(const world::ScenarioConfig& s) {
  json j;
  j["map"] = s.map_id;
  j["ego"] = {{"start", s.ego_start}, {"end", s.ego_end}, {"target_speed", s.ego_target_speed}};
  json npcs = json::array();
  for (const auto& n : s.npcs) {
    json nj;
    nj["model"] = n.model;
    nj["speed"] = n.speed;
    nj["start"] = n.start;
    nj["end"] = n.end;
    nj["start_offset"] = n.start_offset;
    npcs.push_back(nj);
  }
  j["npcs"] = npcs;
  json w;
  if (s.weather.clear())
    w["mor"] = nullptr;
  else
    w["mor"] = s.weather.mor;
  w["sun_altitude"] = s.weather.sun_altitude_deg;
  w["road_water"] = s.weather.road_water;
  j["weather"] = w;
  j["seed"] = s.seed;
  return j;
}

world::ScenarioConfig scenario_from_json(const json& j) {
  try {
    world::ScenarioConfig s;
    s.map_id = j.at("map").get<std::string>();
    const auto& ego = j.at("ego");
    s.ego_start = ego.at("start").get<std::string>();
    s.ego_end = ego.at("end").get<std::string>();
    s.ego_target_speed = ego.at("target_speed").get<double>();
    for (const auto& nj : j.value("npcs", json::array())) {
      world::NpcConfig n;
      n.model = nj.at("model").get<std::string>();
      n.speed = nj.at("speed").get<double>();
      n.start = nj.at("start").get<std::string>();
      n.end = nj.at("end").get<std::string>();
      n.start_offset = nj.value("start_offset", 0.0);
      s.npcs.push_back(n);
    }
    if (j.contains("weather")) {
      const auto& w = j.at("weather");
      if (w.contains("mor") && !w.at("mor").is_null()) s.weather.mor = w.at("mor").get<double>();
      s.weather.sun_altitude_deg = w.value("sun_altitude", 45.0);
      s.weather.road_water = w.value("road_water", 0.0);
    }
    s.seed = j.value("seed", 1ull);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario schema error: ") + e.what());
  }
}

world::ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  json j = json::parse(f, nullptr, true, true);
  return scenario_from_json(j);
}

void save_scenario(const std::filesystem::path& path, const world::ScenarioConfig& s) {
  auto f = open_out(path);
  f << scenario_to_json(s).dump(2) << "\n";
}

json stats_to_json(const world::RunStats& stats) {
  json j;
  j["n_fp"] = stats.n_fp;
  j["n_fn"] = stats.n_fn;
  j["n_fog"] = stats.n_fog;
  j["n_frame"] = stats.n_frame;
  j["d_min"] = stats.d_min;
  j["collided"] = stats.collided;
  j["stuck"] = stats.stuck;
  j["route_violation"] = stats.route_violation;
  j["route_completed"] = stats.route_completed;
  j["corner_case"] = stats.corner_case();
  return j;
}

void write_trace_jsonl(const std::filesystem::path& path, const world::RunStats& stats) {
  auto f = open_out(path);
  for (const auto& r : stats.trace) {
    json j;
    j["t"] = r.t;
    j["ego"] = {{"x", r.ego.position.x}, {"y", r.ego.position.y}, {"z", r.ego.position.z},
                {"yaw", r.ego.yaw},      {"pitch", r.ego.pitch},  {"speed", r.ego_speed}};
    json npcs = json::array();
    for (const auto& p : r.npc_poses) npcs.push_back(vec_to_json(p.position));
    j["npcs"] = npcs;
    j["cmd"] = {{"throttle", r.cmd.throttle}, {"brake", r.cmd.brake}, {"steer", r.cmd.steer}};
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["in_fog_noise"] = r.in_fog_noise;
    f << j.dump() << "\n";
  }
}

void write_search_log_jsonl(const std::filesystem::path& path,
                            const std::vector<search::SearchLogEntry>& log) {
  auto f = open_out(path);
  for (const auto& e : log) {
    json j;
    j["episode"] = e.episode;
    j["iteration"] = e.iteration;
    j["scenario"] = e.scenario_hash;
    j["mutation"] = e.mutation_kind;
    j["factor"] = e.factor_used;
    j["o_old"] = e.o_old;
    j["o_new"] = e.o_new;
    j["accepted"] = e.accepted;
    j["T"] = e.temperature;
    j["corner"] = e.corner;
    f << j.dump() << "\n";
  }
}

void write_session_log_jsonl(const std::filesystem::path& path,
                             const std::vector<sync::SessionLogEntry>& log) {
  auto f = open_out(path);
  for (const auto& e : log) {
    json j;
    j["seq"] = e.seq;
    j["from"] = e.from;
    j["to"] = e.to;
    j["kind"] = sync::kind_name(e.kind);
    j["frame"] = e.frame;
    j["time"] = e.time;
    j["payload_size"] = e.payload_size;
    f << j.dump() << "\n";
  }
}

void write_session_times_jsonl(const std::filesystem::path& path,
                               const std::vector<sync::SessionLogEntry>& log,
                               const std::vector<double>& wall_times) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < log.size() && i < wall_times.size(); ++i) {
    json j;
    j["seq"] = log[i].seq;
    j["wall_recv"] = wall_times[i];
    f << j.dump() << "\n";
  }
}

std::string fnv_hex(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_str(text)));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
}

}  // namespace fogsim::io
