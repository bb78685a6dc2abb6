// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fogsim/geom.hpp"
#include "fogsim/scene.hpp"

namespace fogsim::world {

struct NpcModel {
  std::string name;
  double length = 4.5, width = 1.9, height = 1.5;
  double reflectivity = 0.7;
  bool pedestrian = false;
  bool small_target = false;  // factor-3 subset
  bool tall_vehicle = false;  // factor-4 subset
};

const std::vector<NpcModel>& npc_catalog();
const NpcModel& npc_model(const std::string& name);  // throws on unknown model

struct Waypoint {
  std::string id;
  Vec3 pos;
};

struct Route {
  std::string start, end;
  std::vector<Vec3> polyline;

  double length() const;
  // position/heading at arc length s (clamped to the ends)
  Vec3 point_at(double s) const;
  double heading_at(double s) const;
  // closest arc length to p, searching forward of s_hint
  double project(const Vec3& p, double s_hint) const;
  double lateral_distance(const Vec3& p) const;
};

// Hand-authored lane graphs with matching static geometry. Available ids:
// flat-junction, tunnel-approach, slope, wall-corridor.
class RoadMap {
 public:
  static const RoadMap& get(const std::string& id);
  static const std::vector<std::string>& ids();

  const std::string& id() const { return id_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  const std::vector<Route>& routes() const { return routes_; }
  const Route* find_route(const std::string& start, const std::string& end) const;
  bool has_waypoint(const std::string& id) const;

  double ground_z(double x, double y) const;
  // terrain pitch experienced by a body at p heading yaw (rad, nose-up > 0)
  double ground_pitch(const Vec3& p, double yaw) const;

  const std::vector<scene::Primitive>& static_primitives() const { return statics_; }
  const scene::Aabb& bounds() const { return bounds_; }

 private:
  friend RoadMap make_map(const std::string&);
  std::string id_;
  std::vector<Waypoint> waypoints_;
  std::vector<Route> routes_;
  std::vector<scene::Primitive> statics_;
  scene::Aabb bounds_;
  // slope terrain: z ramps from 0 at slope_x0_ to slope_rise_ at slope_x1_
  double slope_x0_ = 0.0, slope_x1_ = 0.0, slope_rise_ = 0.0;
  bool has_slope_ = false;
};

}  // namespace fogsim::world
