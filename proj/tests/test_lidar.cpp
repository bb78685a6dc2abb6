// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "fogsim/lidar.hpp"
#include "fogsim/rng.hpp"
#include "oracles.hpp"

using namespace fogsim;
using namespace fogsim::lidar;

namespace {

LidarConfig test_config() {
  LidarConfig c;
  c.channels = 4;
  c.vertical_fov_min_deg = -10.0;
  c.vertical_fov_max_deg = 2.0;
  c.horizontal_resolution_deg = 6.0;
  c.max_range = 120.0;
  c.range_bin = 0.1;
  c.near_field = 1.0;
  return c;
}

scene::FogProfile homogeneous_profile(double mor) {
  scene::FogProfile p;
  p.homogeneous = true;
  p.alpha0 = std::log(20.0) / mor;
  p.beta0 = 0.046 / mor;
  return p;
}

scene::Scene box_scene(double dist, double refl, double mor) {
  scene::Scene s;
  scene::Primitive ground;
  ground.shape = scene::Shape::kGroundPlane;
  ground.reflectivity = 0.2;
  s.primitives.push_back(ground);
  scene::Primitive box;
  box.shape = scene::Shape::kAxisBox;
  box.position = {dist + 1.0, 0.0, 1.0};
  box.dims = {2.0, 4.0, 2.0};
  box.reflectivity = refl;
  box.actor_id = 1;
  s.primitives.push_back(box);
  s.fog = std::isinf(mor) ? scene::FogField::clear() : scene::FogField::homogeneous_mor(mor);
  return s;
}

}  // namespace

TEST_CASE("emit_directions: 1 channel at 90 deg resolution yields 4 rays") {
  LidarConfig c = test_config();
  c.channels = 1;
  c.vertical_fov_min_deg = c.vertical_fov_max_deg = 0.0;
  c.horizontal_resolution_deg = 90.0;
  auto dirs = emit_directions(c);
  REQUIRE(dirs.size() == 4);
  CHECK(dirs[0].azimuth_deg == 0.0);
  CHECK(dirs[3].azimuth_deg == 270.0);
  CHECK(dirs[0].dir.x == doctest::Approx(1.0));
  CHECK(dirs[1].dir.y == doctest::Approx(1.0));
}

TEST_CASE("emit_directions: 32 channels at 0.2 deg gives 57600 rays") {
  LidarConfig c = test_config();
  c.channels = 32;
  c.horizontal_resolution_deg = 0.2;
  CHECK(emit_directions(c).size() == 57600);
}

TEST_CASE("emit_directions: two channels land on the fov endpoints") {
  LidarConfig c = test_config();
  c.channels = 2;
  c.vertical_fov_min_deg = -10.0;
  c.vertical_fov_max_deg = 10.0;
  c.horizontal_resolution_deg = 120.0;
  auto dirs = emit_directions(c);
  REQUIRE(dirs.size() == 6);
  CHECK(dirs[0].elevation_deg == doctest::Approx(-10.0));
  CHECK(dirs[1].elevation_deg == doctest::Approx(10.0));
}

TEST_CASE("hard response peaks at beta0/R0^2 in clear air") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  auto resp = hard_response(10.0, 1.0, clear, c);
  REQUIRE(resp.r0 == 10.0);
  double peak = 0.0, peak_r = 0.0;
  for (const auto& s : resp.samples)
    if (s.power > peak) {
      peak = s.power;
      peak_r = s.r;
    }
  CHECK(peak == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(peak_r == doctest::Approx(10.0 + 0.5 * c.pulse_extent()).epsilon(0.01));
}

TEST_CASE("hard response is zero outside the pulse window") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  auto resp = hard_response(20.0, 0.7, clear, c);
  for (const auto& s : resp.samples) {
    if (s.r < 20.0 || s.r > 20.0 + c.pulse_extent()) CHECK(s.power == 0.0);
  }
}

TEST_CASE("extra attenuation scales the hard curve pointwise") {
  LidarConfig c = test_config();
  scene::PathAttenuation a{0.3, 1.0, false};
  scene::PathAttenuation b{0.6, 1.0, false};
  auto ra = hard_response(15.0, 0.5, a, c);
  auto rb = hard_response(15.0, 0.5, b, c);
  double factor = std::exp(-2.0 * 0.3);
  for (std::size_t i = 0; i < ra.samples.size(); ++i)
    CHECK(rb.samples[i].power == doctest::Approx(ra.samples[i].power * factor).epsilon(1e-12));
}

TEST_CASE("hard response rejects non-positive target distance") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  CHECK_THROWS_AS(hard_response(0.0, 0.5, clear, c), std::invalid_argument);
  CHECK_THROWS_AS(hard_response(5.0, 1.5, clear, c), std::invalid_argument);
}

TEST_CASE("soft response in clear weather is identically zero") {
  LidarConfig c = test_config();
  scene::FogProfile clear;
  auto resp = soft_response(clear, 50.0, c);
  for (const auto& s : resp.samples) CHECK(s.power == 0.0);
}

TEST_CASE("soft response matches the oversampled trapezoid oracle (spec example)") {
  LidarConfig c = test_config();
  auto prof = homogeneous_profile(30.0);
  auto resp = soft_response(prof, 50.0, c);
  // the example point: R = 5 m
  double impl = 0.0;
  for (const auto& s : resp.samples)
    if (s.r == doctest::Approx(5.0)) impl = s.power;
  double want = oracles::soft_value_trapezoid(5.0, 50.0, prof.alpha0, prof.beta0, c);
  CHECK(std::abs(impl - want) / want < 1e-6);
}

TEST_CASE("soft response matches the oracle at every sample for random configs") {
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    LidarConfig c = test_config();
    c.max_range = 60.0;
    c.near_field = trial % 2 == 0 ? 1.0 : 2.0;
    double mor = rng.uniform(10.0, 300.0);
    double r0 = rng.uniform(5.0, 100.0);
    auto prof = homogeneous_profile(mor);
    auto resp = soft_response(prof, r0, c);
    double peak = 0.0;
    for (const auto& s : resp.samples) peak = std::max(peak, s.power);
    double worst = 0.0;
    for (const auto& s : resp.samples) {
      double want = oracles::soft_value_trapezoid(s.r, r0, prof.alpha0, prof.beta0, c);
      double rel = std::abs(s.power - want) / std::max(std::abs(want), 1e-6 * peak);
      worst = std::max(worst, rel);
    }
    INFO("mor=", mor, " r0=", r0, " worst=", worst);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("a near target truncates the backscatter curve") {
  LidarConfig c = test_config();
  auto prof = homogeneous_profile(20.0);
  auto cut = soft_response(prof, 1.0, c);
  auto open = soft_response(prof, std::numeric_limits<double>::infinity(), c);
  double cut_mass = 0.0, free_mass = 0.0;
  for (const auto& s : cut.samples) cut_mass += s.power;
  for (const auto& s : open.samples) free_mass += s.power;
  CHECK(cut_mass < free_mass);
  // nothing at all survives past the target plus one pulse extent
  for (const auto& s : cut.samples)
    if (s.r > 1.0 + c.pulse_extent()) CHECK(s.power == 0.0);
  // the with-cut and without-cut oracles bracket the implementation
  for (double r_probe : {0.5, 2.0, 4.0, 6.5}) {
    double want_cut = oracles::soft_value_trapezoid(r_probe, 1.0, prof.alpha0, prof.beta0, c);
    double want_open = oracles::soft_value_no_cut(r_probe, prof.alpha0, prof.beta0, c);
    double impl = 0.0;
    for (const auto& s : cut.samples)
      if (s.r == doctest::Approx(r_probe)) impl = s.power;
    CHECK(impl == doctest::Approx(want_cut).epsilon(1e-5));
    CHECK(impl <= want_open * (1.0 + 1e-9));
  }
}

TEST_CASE("total response is the pointwise sum and rejects mismatched grids") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  auto hard = hard_response(12.0, 0.6, clear, c);
  auto prof = homogeneous_profile(40.0);
  auto soft = soft_response(prof, 12.0, c);
  auto total = total_response(hard, soft);
  for (std::size_t i = 0; i < total.samples.size(); ++i)
    CHECK(total.samples[i].power == hard.samples[i].power + soft.samples[i].power);

  LidarConfig c2 = c;
  c2.range_bin = 0.2;
  auto soft2 = soft_response(prof, 12.0, c2);
  CHECK_THROWS_AS(total_response(hard, soft2), std::invalid_argument);
}

TEST_CASE("select_return calibrates the pulse peak back to the target range") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  for (double r0 : {2.0, 10.0, 37.3, 80.0}) {
    auto hard = hard_response(r0, 0.8, clear, c);
    auto pt = select_return(hard, c, 1e-12);
    REQUIRE(pt);
    CHECK(std::abs(pt->position.norm() - r0) <= c.range_bin + 1e-9);
    CHECK(pt->provenance == Provenance::kHardTarget);
    CHECK(pt->true_range == r0);
  }
}

TEST_CASE("select_return keeps the raw argmax when calibration is disabled") {
  LidarConfig c = test_config();
  c.raw_argmax = true;
  scene::PathAttenuation clear{};
  auto hard = hard_response(10.0, 0.8, clear, c);
  auto pt = select_return(hard, c, 1e-12);
  REQUIRE(pt);
  CHECK(pt->position.norm() ==
        doctest::Approx(10.0 + 0.5 * c.pulse_extent()).epsilon(0.01));
}

TEST_CASE("dense fog beats a weak far target and flags fog provenance") {
  LidarConfig c = test_config();
  double mor = 20.0;
  auto prof = homogeneous_profile(mor);
  double r0 = 60.0;
  scene::PathAttenuation path{std::log(20.0) / mor * r0, 1.0, false};
  auto hard = hard_response(r0, 0.1, path, c);
  auto soft = soft_response(prof, r0, c);
  double hard_max = 0.0, soft_max = 0.0;
  for (const auto& s : hard.samples) hard_max = std::max(hard_max, s.power);
  for (const auto& s : soft.samples) soft_max = std::max(soft_max, s.power);
  REQUIRE(soft_max > hard_max);  // the replacement mechanism
  auto pt = select_return(total_response(hard, soft), c, 1e-12);
  REQUIRE(pt);
  CHECK(pt->provenance == Provenance::kFogNoise);
  CHECK(pt->position.norm() < 10.0);
  CHECK(pt->true_range == r0);
}

TEST_CASE("an all-zero curve yields no return") {
  LidarConfig c = test_config();
  PulseResponse zero;
  zero.samples.resize(100);
  for (int i = 0; i < 100; ++i) zero.samples[static_cast<std::size_t>(i)] = {c.sample_r(i), 0.0};
  CHECK(!select_return(zero, c, 0.0));
}

TEST_CASE("argmax ties resolve to the smaller range") {
  LidarConfig c = test_config();
  PulseResponse two;
  two.samples = {{1.0, 0.5}, {2.0, 0.9}, {3.0, 0.9}, {4.0, 0.1}};
  c.raw_argmax = true;
  auto pt = select_return(two, c, 0.0);
  REQUIRE(pt);
  CHECK(pt->position.norm() == doctest::Approx(2.0));
}

TEST_CASE("returns below the noise floor are dropped") {
  LidarConfig c = test_config();
  scene::PathAttenuation clear{};
  auto hard = hard_response(30.0, 0.5, clear, c);  // peak 0.5/900 = 5.6e-4
  CHECK(select_return(hard, c, 1e-3) == std::nullopt);
  CHECK(select_return(hard, c, 1e-4).has_value());
}

TEST_CASE("scan of an empty clear scene returns an empty cloud") {
  scene::Scene s;
  s.fog = scene::FogField::clear();
  auto cloud = scan(s, test_config(), Pose{{0, 0, 1.8}, 0, 0});
  CHECK(cloud.points.empty());
}

TEST_CASE("scan sees only the box in a clear scene, at the right range") {
  auto s = box_scene(10.0, 0.8, std::numeric_limits<double>::infinity());
  s.primitives.erase(s.primitives.begin());  // drop the ground
  LidarConfig c = test_config();
  c.vertical_fov_min_deg = -2.0;
  c.vertical_fov_max_deg = 2.0;
  auto cloud = scan(s, c, Pose{{0, 0, 1.8}, 0, 0});
  REQUIRE(!cloud.points.empty());
  for (const auto& p : cloud.points) {
    CHECK(p.provenance == Provenance::kHardTarget);
    CHECK(p.actor_id == 1);
    double range = p.position.norm();
    CHECK(range > 9.5);
    CHECK(range < 12.5);
  }
}

TEST_CASE("dense fog wraps an open scene in fog-noise returns") {
  scene::Scene s;
  scene::Primitive ground;
  ground.shape = scene::Shape::kGroundPlane;
  ground.reflectivity = 0.2;
  s.primitives.push_back(ground);
  s.fog = scene::FogField::homogeneous_mor(8.0);
  LidarConfig c = test_config();
  auto cloud = scan(s, c, Pose{{0, 0, 1.8}, 0, 0});
  REQUIRE(!cloud.points.empty());
  int fog = 0;
  for (const auto& p : cloud.points)
    fog += p.provenance == Provenance::kFogNoise ? 1 : 0;
  CHECK(fog > static_cast<int>(cloud.points.size()) / 2);
}

TEST_CASE("scan is deterministic") {
  auto s = box_scene(15.0, 0.7, 25.0);
  LidarConfig c = test_config();
  auto a = scan(s, c, Pose{{0, 0, 1.8}, 0.3, 0.05});
  auto b = scan(s, c, Pose{{0, 0, 1.8}, 0.3, 0.05});
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].position.x == b.points[i].position.x);
    CHECK(a.points[i].intensity == b.points[i].intensity);
  }
}

TEST_CASE("parallel scan equals serial scan") {
  auto s = box_scene(15.0, 0.7, 25.0);
  LidarConfig c = test_config();
  ScanContext ctx(s.fog, c);
  auto a = scan(s, ctx, Pose{{0, 0, 1.8}, 0.3, 0.0});
  auto b = scan_parallel(s, ctx, Pose{{0, 0, 1.8}, 0.3, 0.0}, 0, 3);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].position.x == b.points[i].position.x);
    CHECK(a.points[i].position.y == b.points[i].position.y);
    CHECK(a.points[i].intensity == b.points[i].intensity);
    CHECK(a.points[i].provenance == b.points[i].provenance);
  }
}

TEST_CASE("scan equals the composed per-ray operations") {
  for (double mor : {std::numeric_limits<double>::infinity(), 35.0, 12.0}) {
    auto s = box_scene(12.0, 0.7, mor);
    LidarConfig c = test_config();
    c.horizontal_resolution_deg = 20.0;
    c.max_range = 60.0;
    Pose pose{{0, 0, 1.8}, 0.1, 0.02};
    ScanContext ctx(s.fog, c);
    auto cloud = scan(s, ctx, pose);

    std::vector<LidarPoint> composed;
    for (const auto& ed : emit_directions(c)) {
      Vec3 wdir = pose.to_world_dir(ed.dir);
      auto hit = scene::raycast(s, pose.position, wdir, c.max_range);
      auto prof = scene::fog_profile(s, pose.position, wdir, c.max_range);
      PulseResponse total;
      if (hit) {
        auto path = scene::path_attenuation_sum(s, pose.position, wdir, hit->distance);
        auto hard = hard_response(hit->distance, hit->reflectivity, path, c);
        auto soft = soft_response(prof, hit->distance, c);
        total = total_response(hard, soft);
      } else {
        total = soft_response(prof, std::numeric_limits<double>::infinity(), c);
      }
      RayTag tag{ed.dir, ed.channel, ed.azimuth_deg, hit ? hit->actor_id : std::nullopt};
      auto pt = select_return(total, c, c.noise_floor(), tag);
      if (pt) composed.push_back(*pt);
    }
    REQUIRE(cloud.points.size() == composed.size());
    for (std::size_t i = 0; i < composed.size(); ++i) {
      CHECK(cloud.points[i].position.x == composed[i].position.x);
      CHECK(cloud.points[i].position.y == composed[i].position.y);
      CHECK(cloud.points[i].position.z == composed[i].position.z);
      CHECK(cloud.points[i].intensity == composed[i].intensity);
      CHECK(cloud.points[i].channel == composed[i].channel);
      CHECK((cloud.points[i].provenance == composed[i].provenance));
      CHECK(cloud.points[i].actor_id == composed[i].actor_id);
      CHECK(cloud.points[i].true_range == composed[i].true_range);
    }
  }
}

TEST_CASE("thicker fog never brightens a hard return or extends detection range") {
  LidarConfig c = test_config();
  c.horizontal_resolution_deg = 30.0;
  std::vector<double> mors = {400.0, 100.0, 40.0, 15.0};
  double prev_range = 1e9;
  std::map<std::pair<int, int>, double> prev_intensity;
  for (double mor : mors) {
    auto s = box_scene(18.0, 0.7, mor);
    auto cloud = scan(s, c, Pose{{0, 0, 1.8}, 0, 0});
    double max_hard_range = 0.0;
    std::map<std::pair<int, int>, double> hard_intensity;
    for (const auto& p : cloud.points) {
      if (p.provenance != Provenance::kHardTarget) continue;
      max_hard_range = std::max(max_hard_range, p.position.norm());
      hard_intensity[{p.channel, static_cast<int>(std::lround(p.azimuth_deg * 10))}] = p.intensity;
    }
    CHECK(max_hard_range <= prev_range + 1e-9);
    for (const auto& [ray, v] : hard_intensity) {
      auto it = prev_intensity.find(ray);
      if (it != prev_intensity.end()) CHECK(v <= it->second * (1.0 + 1e-12));
    }
    prev_range = max_hard_range;
    prev_intensity = std::move(hard_intensity);
  }
}
