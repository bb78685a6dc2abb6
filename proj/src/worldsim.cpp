// SPDX-License-Identifier: Apache-2.0
#include "fogsim/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fogsim::world {

void WeatherParams::validate() const {
  if (!(mor > 0.0)) throw std::invalid_argument("mor must be > 0");
  if (sun_altitude_deg < -90.0 || sun_altitude_deg > 90.0)
    throw std::invalid_argument("sun_altitude outside [-90,90]");
  if (road_water < 0.0 || road_water > 1.0)
    throw std::invalid_argument("road_water outside [0,1]");
}

void ScenarioConfig::validate() const {
  weather.validate();
  const RoadMap& m = RoadMap::get(map_id);  // throws on unknown map
  if (ego_start == ego_end) throw std::invalid_argument("ego start equals end");
  if (!m.find_route(ego_start, ego_end))
    throw std::invalid_argument("ego route not on the lane graph");
  if (!(ego_target_speed > 0.0)) throw std::invalid_argument("ego target speed must be > 0");
  for (const auto& n : npcs) {
    npc_model(n.model);  // throws on unknown model
    if (n.speed < 0.0) throw std::invalid_argument("npc speed must be >= 0");
    const Route* r = m.find_route(n.start, n.end);
    if (!r) throw std::invalid_argument("npc route not on the lane graph");
    if (n.start_offset < 0.0 || n.start_offset > r->length())
      throw std::invalid_argument("npc start_offset beyond route");
  }
}

EpisodeSettings EpisodeSettings::campaign_defaults() {
  EpisodeSettings s;
  s.lidar.channels = 10;
  s.lidar.vertical_fov_min_deg = -12.0;
  s.lidar.vertical_fov_max_deg = 4.0;
  s.lidar.horizontal_resolution_deg = 4.0;
  s.lidar.max_range = 80.0;
  s.lidar.range_bin = 0.25;
  s.lidar.near_field = 1.0;
  s.lidar.noise_floor_scale = 2e-4;
  return s;
}

Command planner_stub(const std::vector<perception::Detection>& detections, const Route& route,
                     EgoState& ego, double target_speed, const PlannerConfig& pc,
                     double ego_half_length) {
  if (route.polyline.size() < 2) throw std::invalid_argument("planner needs a route");
  ego.route_progress = route.project(ego.pose.position, ego.route_progress);
  Command cmd;
  if (ego.route_progress >= route.length() - 0.5) return cmd;  // route exhausted

  double lookahead = std::clamp(pc.lookahead_gain * ego.speed, pc.lookahead_min, pc.lookahead_max);
  Vec3 target = route.point_at(ego.route_progress + lookahead);
  double heading_err =
      wrap_angle(std::atan2(target.y - ego.pose.position.y, target.x - ego.pose.position.x) -
                 ego.pose.yaw);
  double curvature = 2.0 * std::sin(heading_err) / lookahead;
  double steer_rad = std::atan(curvature * pc.wheelbase);
  cmd.steer = std::clamp(steer_rad / deg2rad(pc.steer_max_deg), -1.0, 1.0);

  double err = target_speed - ego.speed;
  cmd.throttle = std::clamp(err * 0.6, 0.0, 1.0);
  cmd.brake = err < -1.0 ? std::clamp(-err * 0.3, 0.0, 1.0) : 0.0;

  double brake_dist = ego.speed * ego.speed / (2.0 * pc.decel_max) + pc.corridor_standoff;
  double x_near = ego_half_length + 0.2;
  for (const auto& det : detections) {
    Vec3 body = ego.pose.to_body(det.center);
    double re = 0.5 * std::hypot(det.extent.x, det.extent.y);
    bool ahead = body.x + re >= x_near && body.x - re <= ego_half_length + brake_dist;
    bool within = std::abs(body.y) <= pc.corridor_half_width + re;
    if (ahead && within) {
      cmd.brake = 1.0;
      cmd.throttle = 0.0;
      break;
    }
  }
  return cmd;
}

double fog_noise_radius(const scene::Scene& sc, const lidar::ScanContext& ctx,
                        const Pose& sensor) {
  if (ctx.fog_clear()) return 0.0;
  std::vector<double> fog_ranges;
  for (int k = 0; k < 36; ++k) {
    double az = k * 10.0;
    lidar::EmitDirection ed{dir_from_angles(deg2rad(az), 0.0), 0, az, 0.0};
    auto pt = lidar::trace_single(sc, ctx, sensor, ed);
    if (pt && pt->provenance == lidar::Provenance::kFogNoise)
      fog_ranges.push_back(pt->position.norm());
  }
  if (fog_ranges.empty()) return 0.0;
  std::sort(fog_ranges.begin(), fog_ranges.end());
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(fog_ranges.size()))) - 1;
  return fog_ranges[std::min(idx, fog_ranges.size() - 1)];
}

SimCore::SimCore(const ScenarioConfig& scenario, const EpisodeSettings& settings)
    : scenario_(scenario), settings_(settings) {
  scenario_.validate();
  map_ = &RoadMap::get(scenario_.map_id);
  route_ = map_->find_route(scenario_.ego_start, scenario_.ego_end);
  ego_.pose.position = route_->point_at(0.0);
  ego_.pose.yaw = route_->heading_at(0.0);
  ego_.pose.position.z = map_->ground_z(ego_.pose.position.x, ego_.pose.position.y);
  ego_.pose.pitch = map_->ground_pitch(ego_.pose.position, ego_.pose.yaw);
  ego_.speed = 0.0;
  for (const auto& nc : scenario_.npcs) {
    NpcState n;
    n.model = &npc_model(nc.model);
    n.route = map_->find_route(nc.start, nc.end);
    n.s = nc.start_offset;
    n.speed = nc.speed;
    npcs_.push_back(n);
  }
  scene_.fog = scenario_.weather.clear() ? scene::FogField::clear()
                                         : scene::FogField::homogeneous_mor(scenario_.weather.mor);
  scene_.primitives = map_->static_primitives();
  scene_.bounds = map_->bounds();
  static_count_ = scene_.primitives.size();
}

Pose SimCore::npc_pose(const NpcState& n) const {
  Pose p;
  p.position = n.route->point_at(n.s);
  p.yaw = n.route->heading_at(n.s);
  p.position.z = map_->ground_z(p.position.x, p.position.y);
  p.pitch = map_->ground_pitch(p.position, p.yaw);
  return p;
}

const scene::Scene& SimCore::render() {
  scene_.primitives.resize(static_count_);
  for (std::size_t i = 0; i < npcs_.size(); ++i) {
    const NpcState& n = npcs_[i];
    Pose pose = npc_pose(n);
    scene::Primitive prim;
    if (n.model->pedestrian) {
      prim.shape = scene::Shape::kCylinder;
      prim.position = pose.position;
      prim.dims = {0.5 * n.model->width, n.model->height, 0.0};
    } else {
      prim.shape = scene::Shape::kOrientedBox;
      prim.position = pose.position + Vec3{0.0, 0.0, 0.5 * n.model->height};
      prim.yaw = pose.yaw;
      prim.dims = {n.model->length, n.model->width, n.model->height};
    }
    prim.reflectivity = n.model->reflectivity;
    prim.actor_id = static_cast<std::uint32_t>(i + 1);
    scene_.primitives.push_back(prim);
  }
  return scene_;
}

Pose SimCore::ego_pose() const { return ego_.pose; }

Pose SimCore::sensor_pose() const {
  const Pose& mount = settings_.lidar.mount;
  Pose s;
  s.position = ego_.pose.to_world(mount.position);
  s.yaw = ego_.pose.yaw + mount.yaw;
  s.pitch = ego_.pose.pitch + mount.pitch;
  return s;
}

std::vector<perception::TruthActor> SimCore::truth() const {
  std::vector<perception::TruthActor> out;
  for (std::size_t i = 0; i < npcs_.size(); ++i) {
    Pose p = npc_pose(npcs_[i]);
    perception::TruthActor t;
    t.actor_id = static_cast<std::uint32_t>(i + 1);
    t.center = p.position + Vec3{0.0, 0.0, 0.5 * npcs_[i].model->height};
    t.extent = {npcs_[i].model->length, npcs_[i].model->width, npcs_[i].model->height};
    out.push_back(t);
  }
  return out;
}

void SimCore::step(const Command& cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const PlannerConfig& pc = settings_.planner;
  // ego, kinematic bicycle
  double accel = std::clamp(cmd.throttle, 0.0, 1.0) * pc.accel_max -
                 std::clamp(cmd.brake, 0.0, 1.0) * pc.decel_max;
  ego_.speed = std::clamp(ego_.speed + accel * dt, 0.0, 40.0);
  double steer_rad = std::clamp(cmd.steer, -1.0, 1.0) * deg2rad(pc.steer_max_deg);
  ego_.pose.yaw = wrap_angle(ego_.pose.yaw + ego_.speed / pc.wheelbase * std::tan(steer_rad) * dt);
  ego_.pose.position.x += ego_.speed * std::cos(ego_.pose.yaw) * dt;
  ego_.pose.position.y += ego_.speed * std::sin(ego_.pose.yaw) * dt;
  ego_.pose.position.z = map_->ground_z(ego_.pose.position.x, ego_.pose.position.y);
  ego_.pose.pitch = map_->ground_pitch(ego_.pose.position, ego_.pose.yaw);
  sim_progress_ = route_->project(ego_.pose.position, sim_progress_);

  // NPCs: lane following with a 2 s headway toward whoever is in front
  for (std::size_t i = 0; i < npcs_.size(); ++i) {
    NpcState& n = npcs_[i];
    double v = n.speed;
    if (!n.model->pedestrian) {
      double front_gap = 1e300;
      auto consider_actor = [&](const Vec3& pos) {
        if (n.route->lateral_distance(pos) > 1.5) return;
        double s_other = n.route->project(pos, 0.0);
        if (s_other > n.s + 0.1) front_gap = std::min(front_gap, s_other - n.s);
      };
      consider_actor(ego_.pose.position);
      for (std::size_t j = 0; j < npcs_.size(); ++j)
        if (j != i) consider_actor(npc_pose(npcs_[j]).position);
      // choose v so the time headway to the leader stays at or above 2 s
      v = std::min(n.speed, std::max(0.0, (front_gap - 3.0) / 2.0));
    }
    n.s = std::min(n.s + v * dt, n.route->length());
  }
  ++frame_;
}

bool SimCore::collided() const {
  Obb2 ego_box{ego_.pose.position.x, ego_.pose.position.y, ego_.pose.yaw,
               0.5 * settings_.ego_length, 0.5 * settings_.ego_width};
  for (const auto& n : npcs_) {
    Pose p = npc_pose(n);
    Obb2 nb{p.position.x, p.position.y, p.yaw, 0.5 * n.model->length, 0.5 * n.model->width};
    if (obb2_overlap(ego_box, nb)) return true;
  }
  return false;
}

double SimCore::min_npc_distance() const {
  if (npcs_.empty()) return kNoNpcDistance;
  double best = kNoNpcDistance;
  for (const auto& n : npcs_) {
    Pose p = npc_pose(n);
    best = std::min(best, (p.position - ego_.pose.position).norm2d());
  }
  return best;
}

AdsCore::AdsCore(const ScenarioConfig& scenario, const EpisodeSettings& settings)
    : scenario_(scenario), settings_(settings) {
  map_ = &RoadMap::get(scenario_.map_id);
  route_ = map_->find_route(scenario_.ego_start, scenario_.ego_end);
  if (!route_) throw std::invalid_argument("ego route not on the lane graph");
}

AdsCore::Output AdsCore::process(const lidar::PointCloud& cloud, const Pose& ego_pose,
                                 double ego_speed, std::uint64_t frame, double now_s) {
  if (now_s < last_now_) throw std::logic_error("ads clock regressed");
  last_now_ = now_s;
  Output out;
  const RoadMap* m = map_;
  out.detections = perception::cluster(cloud, settings_.perception,
                                       [m](double x, double y) { return m->ground_z(x, y); });
  perception::WeatherSample ws{scenario_.weather.road_water, scenario_.weather.sun_altitude_deg};
  auto phantom = perception::road_water_false_positive(ws, scenario_.seed, frame, ego_pose,
                                                       settings_.perception);
  if (phantom) out.detections.push_back(*phantom);
  ego_.pose = ego_pose;
  ego_.speed = ego_speed;
  out.cmd = planner_stub(out.detections, *route_, ego_, scenario_.ego_target_speed,
                         settings_.planner, 0.5 * settings_.ego_length);
  out.route_progress = ego_.route_progress;
  return out;
}

RunStats run_episode_with_stack(const ScenarioConfig& scenario, const EpisodeSettings& settings,
                                const StackFn& stack) {
  SimCore sim(scenario, settings);
  lidar::ScanContext ctx(scenario.weather.clear()
                             ? scene::FogField::clear()
                             : scene::FogField::homogeneous_mor(scenario.weather.mor),
                         settings.lidar);
  RunStats stats;
  double last_progress = 0.0;
  double last_progress_t = 0.0;
  for (int frame = 0; frame < settings.max_frames; ++frame) {
    const scene::Scene& sc = sim.render();
    Pose sensor = sim.sensor_pose();
    lidar::PointCloud cloud = lidar::scan(sc, ctx, sensor, static_cast<std::uint64_t>(frame));
    auto out = stack(cloud, sim.ego_pose(), sim.ego_speed(), static_cast<std::uint64_t>(frame));
    auto truth = sim.truth();
    auto score = perception::score(out.detections, truth, sensor.position, settings.perception);

    double fog_r = fog_noise_radius(sc, ctx, sensor);
    bool in_fog = false;
    for (const auto& t : truth)
      if ((t.center - sim.ego_pose().position).norm2d() <= fog_r) in_fog = true;

    FrameRecord rec;
    rec.t = frame * settings.dt;
    rec.ego = sim.ego_pose();
    rec.ego_speed = sim.ego_speed();
    for (const auto& t : truth) {
      Pose p;
      p.position = t.center;
      rec.npc_poses.push_back(p);
    }
    rec.detections = out.detections;
    rec.cmd = out.cmd;
    rec.fp = score.false_positives;
    rec.fn = score.false_negatives;
    rec.in_fog_noise = in_fog;
    stats.trace.push_back(rec);

    stats.n_fp += score.false_positives;
    stats.n_fn += score.false_negatives;
    stats.n_fog += in_fog ? 1 : 0;
    stats.n_frame += 1;
    stats.d_min = std::min(stats.d_min, sim.min_npc_distance());

    sim.step(out.cmd, settings.dt);
    stats.d_min = std::min(stats.d_min, sim.min_npc_distance());

    if (sim.collided()) {
      stats.collided = true;
      break;
    }
    if (sim.route_progress() >= sim.route_length() - 0.5) {
      stats.route_completed = true;
      break;
    }
    if (sim.route().lateral_distance(sim.ego_pose().position) > settings.route_violation_m) {
      stats.route_violation = true;
      break;
    }
    double t_now = (frame + 1) * settings.dt;
    if (sim.route_progress() >= last_progress + settings.stuck_progress) {
      last_progress = sim.route_progress();
      last_progress_t = t_now;
    } else if (t_now - last_progress_t > settings.stuck_timeout) {
      stats.stuck = true;
      break;
    }
  }
  return stats;
}

RunStats run_episode(const ScenarioConfig& scenario, const EpisodeSettings& settings) {
  AdsCore ads(scenario, settings);
  return run_episode_with_stack(
      scenario, settings,
      [&](const lidar::PointCloud& cloud, const Pose& pose, double speed, std::uint64_t frame) {
        return ads.process(cloud, pose, speed, frame, frame * settings.dt);
      });
}

int command_feedback_shift(const RunStats& stats, const EpisodeSettings& settings) {
  auto accel = [&](const Command& c) {
    return std::clamp(c.throttle, 0.0, 1.0) * settings.planner.accel_max -
           std::clamp(c.brake, 0.0, 1.0) * settings.planner.decel_max;
  };
  auto matches = [&](int shift) {
    int checked = 0;
    for (std::size_t n = 0; n + static_cast<std::size_t>(shift) < stats.trace.size(); ++n) {
      std::size_t k = n + static_cast<std::size_t>(shift);
      if (k == 0) continue;
      double prev = stats.trace[k - 1].ego_speed;
      double want = std::clamp(prev + accel(stats.trace[n].cmd) * settings.dt, 0.0, 40.0);
      if (stats.trace[k].ego_speed != want) return -1;
      ++checked;
    }
    return checked;
  };
  for (int shift = 0; shift <= 3; ++shift)
    if (matches(shift) > 0) return shift;
  return -1;
}

bool runstats_equal(const RunStats& a, const RunStats& b) {
  if (a.n_fp != b.n_fp || a.n_fn != b.n_fn || a.n_fog != b.n_fog || a.n_frame != b.n_frame)
    return false;
  if (a.d_min != b.d_min || a.collided != b.collided || a.stuck != b.stuck ||
      a.route_violation != b.route_violation || a.route_completed != b.route_completed)
    return false;
  if (a.trace.size() != b.trace.size()) return false;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const auto& x = a.trace[i];
    const auto& y = b.trace[i];
    if (x.t != y.t || x.ego_speed != y.ego_speed) return false;
    if (x.ego.position.x != y.ego.position.x || x.ego.position.y != y.ego.position.y ||
        x.ego.position.z != y.ego.position.z || x.ego.yaw != y.ego.yaw ||
        x.ego.pitch != y.ego.pitch)
      return false;
    if (x.cmd.throttle != y.cmd.throttle || x.cmd.brake != y.cmd.brake ||
        x.cmd.steer != y.cmd.steer)
      return false;
    if (x.fp != y.fp || x.fn != y.fn || x.in_fog_noise != y.in_fog_noise) return false;
    if (x.detections.size() != y.detections.size()) return false;
    for (std::size_t j = 0; j < x.detections.size(); ++j)
      if (x.detections[j].center.x != y.detections[j].center.x ||
          x.detections[j].center.y != y.detections[j].center.y ||
          x.detections[j].point_count != y.detections[j].point_count)
        return false;
    if (x.npc_poses.size() != y.npc_poses.size()) return false;
    for (std::size_t j = 0; j < x.npc_poses.size(); ++j)
      if (x.npc_poses[j].position.x != y.npc_poses[j].position.x ||
          x.npc_poses[j].position.y != y.npc_poses[j].position.y ||
          x.npc_poses[j].position.z != y.npc_poses[j].position.z)
        return false;
  }
  return true;
}

}  // namespace fogsim::world
