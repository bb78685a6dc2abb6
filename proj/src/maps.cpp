// SPDX-License-Identifier: Apache-2.0
#include "fogsim/maps.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace fogsim::world {

const std::vector<NpcModel>& npc_catalog() {
  static const std::vector<NpcModel> catalog = {
      // name            L     W     H     refl  ped    small  tall
      {"sedan", 4.6, 1.9, 1.5, 0.70, false, false, false},
      {"hatchback", 4.0, 1.8, 1.5, 0.68, false, true, false},
      {"small-car", 3.4, 1.5, 1.45, 0.65, false, true, false},
      {"suv", 4.8, 2.0, 1.9, 0.72, false, false, true},
      {"truck", 8.5, 2.5, 3.4, 0.60, false, false, true},
      {"bus", 11.0, 2.6, 3.2, 0.65, false, false, true},
      {"firetruck", 9.0, 2.6, 3.6, 0.55, false, false, true},
      {"motorcycle", 2.2, 0.9, 1.4, 0.50, false, true, false},
      {"bicycle", 1.8, 0.6, 1.6, 0.45, false, true, false},
      {"pedestrian", 0.6, 0.6, 1.75, 0.40, true, true, false},
  };
  return catalog;
}

const NpcModel& npc_model(const std::string& name) {
  for (const auto& m : npc_catalog())
    if (m.name == name) return m;
  throw std::invalid_argument("unknown npc model: " + name);
}

double Route::length() const {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) len += (polyline[i + 1] - polyline[i]).norm2d();
  return len;
}

Vec3 Route::point_at(double s) const {
  if (polyline.empty()) return {};
  if (s <= 0.0) return polyline.front();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    double seg = (polyline[i + 1] - polyline[i]).norm2d();
    if (s <= seg) {
      double t = seg > 0.0 ? s / seg : 0.0;
      return polyline[i] + (polyline[i + 1] - polyline[i]) * t;
    }
    s -= seg;
  }
  return polyline.back();
}

double Route::heading_at(double s) const {
  if (polyline.size() < 2) return 0.0;
  if (s < 0.0) s = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    double seg = (polyline[i + 1] - polyline[i]).norm2d();
    if (s <= seg || i + 2 == polyline.size()) {
      Vec3 d = polyline[i + 1] - polyline[i];
      return std::atan2(d.y, d.x);
    }
    s -= seg;
  }
  Vec3 d = polyline.back() - polyline[polyline.size() - 2];
  return std::atan2(d.y, d.x);
}

double Route::project(const Vec3& p, double s_hint) const {
  double best_s = s_hint, best_d = 1e300;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    Vec3 a = polyline[i], b = polyline[i + 1];
    Vec3 ab = b - a;
    double seg = ab.norm2d();
    if (seg <= 0.0) continue;
    double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / (seg * seg), 0.0, 1.0);
    double s = acc + t * seg;
    Vec3 q = a + ab * t;
    double d = (p - q).norm2d();
    // prefer forward progress: ignore projections far behind the hint
    if (s >= s_hint - 5.0 && d < best_d) {
      best_d = d;
      best_s = s;
    }
    acc += seg;
  }
  return std::max(best_s, s_hint);
}

double Route::lateral_distance(const Vec3& p) const {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    Vec3 a = polyline[i], b = polyline[i + 1];
    Vec3 ab = b - a;
    double seg2 = ab.x * ab.x + ab.y * ab.y;
    if (seg2 <= 0.0) continue;
    double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / seg2, 0.0, 1.0);
    Vec3 q = a + ab * t;
    best = std::min(best, (p - q).norm2d());
  }
  return best;
}

namespace {

scene::Primitive ground_plane(double refl = 0.2) {
  scene::Primitive p;
  p.shape = scene::Shape::kGroundPlane;
  p.position = {0.0, 0.0, 0.0};
  p.reflectivity = refl;
  return p;
}

scene::Primitive box(Vec3 center, Vec3 dims, double refl, double yaw = 0.0) {
  scene::Primitive p;
  p.shape = yaw == 0.0 ? scene::Shape::kAxisBox : scene::Shape::kOrientedBox;
  p.position = center;
  p.dims = dims;
  p.yaw = yaw;
  p.reflectivity = refl;
  return p;
}

}  // namespace

RoadMap make_map(const std::string& id) {
  RoadMap m;
  m.id_ = id;
  if (id == "flat-junction") {
    // two crossing single-lane roads; buildings pulled well back
    m.waypoints_ = {{"W", {-70, 0, 0}}, {"E", {70, 0, 0}}, {"S", {0, -70, 0}}, {"N", {0, 70, 0}}};
    auto wp = [&](const std::string& w) {
      for (auto& q : m.waypoints_)
        if (q.id == w) return q.pos;
      throw std::logic_error("bad wp");
    };
    const char* arms[4] = {"W", "E", "S", "N"};
    for (const char* a : arms)
      for (const char* b : arms) {
        if (std::string(a) == b) continue;
        // opposite arms run straight; others turn at the junction center
        bool straight = (std::string(a) == "W" && std::string(b) == "E") ||
                        (std::string(a) == "E" && std::string(b) == "W") ||
                        (std::string(a) == "S" && std::string(b) == "N") ||
                        (std::string(a) == "N" && std::string(b) == "S");
        Route r;
        r.start = a;
        r.end = b;
        if (straight)
          r.polyline = {wp(a), wp(b)};
        else
          r.polyline = {wp(a), {0, 0, 0}, wp(b)};
        m.routes_.push_back(r);
      }
    m.statics_.push_back(ground_plane());
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        m.statics_.push_back(box({sx * 30.0, sy * 30.0, 4.0}, {12, 12, 8}, 0.5));
  } else if (id == "tunnel-approach") {
    // straight road into a portal at x = 20; walls flank the approach
    m.waypoints_ = {{"A", {-50, 0, 0}}, {"B", {55, 0, 0}}, {"M", {5, 0, 0}}};
    for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"A", "B"}, {"B", "A"}, {"A", "M"}, {"M", "B"}}) {
      Route r;
      r.start = a;
      r.end = b;
      Vec3 pa, pb;
      for (auto& q : m.waypoints_) {
        if (q.id == a) pa = q.pos;
        if (q.id == b) pb = q.pos;
      }
      r.polyline = {pa, pb};
      m.routes_.push_back(r);
    }
    m.statics_.push_back(ground_plane());
    // portal face: wall segments either side of a 4.4 m opening
    m.statics_.push_back(box({20.0, 8.2, 3.0}, {1.0, 12.0, 6.0}, 0.55));
    m.statics_.push_back(box({20.0, -8.2, 3.0}, {1.0, 12.0, 6.0}, 0.55));
    m.statics_.push_back(box({20.0, 0.0, 5.25}, {1.0, 28.0, 1.5}, 0.55));  // lintel
    // bore walls and roof
    m.statics_.push_back(box({40.0, 2.7, 2.5}, {40.0, 0.6, 5.0}, 0.45));
    m.statics_.push_back(box({40.0, -2.7, 2.5}, {40.0, 0.6, 5.0}, 0.45));
    m.statics_.push_back(box({40.0, 0.0, 4.8}, {40.0, 6.0, 0.5}, 0.45));
    // low berms along the approach
    m.statics_.push_back(box({-10.0, 6.5, 1.0}, {56.0, 1.0, 2.0}, 0.5));
    m.statics_.push_back(box({-10.0, -6.5, 1.0}, {56.0, 1.0, 2.0}, 0.5));
  } else if (id == "slope") {
    // flat run-up, a 10 degree climb of 40 m, then a short crest plateau
    double rise = 40.0 * std::tan(deg2rad(10.0));  // 7.053 m
    m.slope_x0_ = 0.0;
    m.slope_x1_ = 40.0;
    m.slope_rise_ = rise;
    m.has_slope_ = true;
    m.waypoints_ = {{"base", {-45, 0, 0}},
                    {"foot", {-5, 0, 0}},
                    {"crest", {40, 0, rise}},
                    {"top", {70, 0, rise}}};
    auto wp = [&](const std::string& w) {
      for (auto& q : m.waypoints_)
        if (q.id == w) return q.pos;
      throw std::logic_error("bad wp");
    };
    for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"base", "top"}, {"top", "base"}, {"base", "crest"}, {"foot", "top"}}) {
      Route r;
      r.start = a;
      r.end = b;
      r.polyline = {wp(a), wp(b)};
      m.routes_.push_back(r);
    }
    m.statics_.push_back(ground_plane());
    {
      // patch center at x=20; surface z runs 0 at x=0 up to `rise` at x=40
      scene::Primitive ramp;
      ramp.shape = scene::Shape::kRamp;
      ramp.position = {20.0, 0.0, 0.0};
      ramp.dims = {40.0, 24.0, rise};
      ramp.reflectivity = 0.2;
      m.statics_.push_back(ramp);
    }
    m.statics_.push_back(box({55.0, 0.0, rise - 0.5}, {30.0, 24.0, 1.0}, 0.2));  // plateau
  } else if (id == "wall-corridor") {
    // straight road with a continuous wall 4 m to the right, open left
    m.waypoints_ = {{"A", {-45, 0, 0}}, {"B", {45, 0, 0}}};
    for (auto [a, b] :
         std::vector<std::pair<std::string, std::string>>{{"A", "B"}, {"B", "A"}}) {
      Route r;
      r.start = a;
      r.end = b;
      Vec3 pa = a == "A" ? Vec3{-45, 0, 0} : Vec3{45, 0, 0};
      Vec3 pb = b == "A" ? Vec3{-45, 0, 0} : Vec3{45, 0, 0};
      r.polyline = {pa, pb};
      m.routes_.push_back(r);
    }
    m.statics_.push_back(ground_plane());
    m.statics_.push_back(box({0.0, -4.3, 1.9}, {110.0, 0.6, 3.8}, 0.8));
  } else {
    throw std::invalid_argument("unknown map id: " + id);
  }
  return m;
}

const RoadMap& RoadMap::get(const std::string& id) {
  static std::map<std::string, RoadMap> cache;
  auto it = cache.find(id);
  if (it == cache.end()) it = cache.emplace(id, make_map(id)).first;
  return it->second;
}

const std::vector<std::string>& RoadMap::ids() {
  static const std::vector<std::string> all = {"flat-junction", "tunnel-approach", "slope",
                                               "wall-corridor"};
  return all;
}

const Route* RoadMap::find_route(const std::string& start, const std::string& end) const {
  for (const auto& r : routes_)
    if (r.start == start && r.end == end) return &r;
  return nullptr;
}

bool RoadMap::has_waypoint(const std::string& wid) const {
  for (const auto& w : waypoints_)
    if (w.id == wid) return true;
  return false;
}

double RoadMap::ground_z(double x, double /*y*/) const {
  if (!has_slope_) return 0.0;
  if (x <= slope_x0_) return 0.0;
  if (x >= slope_x1_) return slope_rise_;
  return slope_rise_ * (x - slope_x0_) / (slope_x1_ - slope_x0_);
}

double RoadMap::ground_pitch(const Vec3& p, double yaw) const {
  if (!has_slope_) return 0.0;
  double step = 1.0;
  Vec3 f{p.x + step * std::cos(yaw), p.y + step * std::sin(yaw), 0.0};
  Vec3 b{p.x - step * std::cos(yaw), p.y - step * std::sin(yaw), 0.0};
  return std::atan2(ground_z(f.x, f.y) - ground_z(b.x, b.y), 2.0 * step);
}

}  // namespace fogsim::world
