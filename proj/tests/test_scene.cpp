// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fogsim/rng.hpp"
#include "fogsim/scene.hpp"

using namespace fogsim;
using namespace fogsim::scene;

namespace {

Scene scene_with(std::vector<Primitive> prims, FogField fog = FogField::clear()) {
  Scene s;
  s.primitives = std::move(prims);
  s.fog = fog;
  return s;
}

Primitive ground(double refl = 0.3) {
  Primitive p;
  p.shape = Shape::kGroundPlane;
  p.reflectivity = refl;
  return p;
}

Primitive axis_box(Vec3 center, Vec3 dims, double refl,
                   std::optional<std::uint32_t> actor = std::nullopt) {
  Primitive p;
  p.shape = Shape::kAxisBox;
  p.position = center;
  p.dims = dims;
  p.reflectivity = refl;
  p.actor_id = actor;
  return p;
}

}  // namespace

TEST_CASE("raycast straight down hits the ground plane at 2 m") {
  Scene s = scene_with({ground()});
  auto h = raycast(s, {0, 0, 2}, {0, 0, -1}, 100.0);
  REQUIRE(h);
  CHECK(h->distance == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("raycast hits an axis-aligned box face at 10 m with its reflectivity") {
  Scene s = scene_with({axis_box({12, 0, 1}, {4, 2, 2}, 0.8)});
  auto h = raycast(s, {0, 0, 1}, {1, 0, 0}, 100.0);
  REQUIRE(h);
  CHECK(h->distance == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(h->reflectivity == 0.8);
}

TEST_CASE("raycast into empty sky returns nothing") {
  Scene s = scene_with({ground()});
  CHECK(!raycast(s, {0, 0, 2}, {0, 0, 1}, 100.0));
}

TEST_CASE("raycast rejects degenerate directions") {
  Scene s = scene_with({ground()});
  CHECK_THROWS_AS(raycast(s, {0, 0, 2}, {0, 0, 0}, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(raycast(s, {0, 0, 2}, {0, 0, -2}, 100.0), std::invalid_argument);
}

TEST_CASE("raycast result is independent of primitive order") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Primitive> prims;
    int n = 2 + static_cast<int>(rng.next_below(6));
    for (int i = 0; i < n; ++i) {
      Vec3 c{rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(0, 3)};
      prims.push_back(axis_box(c, {rng.uniform(1, 6), rng.uniform(1, 6), rng.uniform(1, 4)},
                               0.5, static_cast<std::uint32_t>(i)));
    }
    // a duplicate box guarantees distance ties get exercised
    prims.push_back(prims.front());
    prims.back().actor_id = 99;
    Scene a = scene_with(prims);
    std::reverse(prims.begin(), prims.end());
    Scene b = scene_with(prims);
    for (int k = 0; k < 24; ++k) {
      double az = 2.0 * kPi * k / 24.0;
      Vec3 dir = dir_from_angles(az, 0.0);
      auto ha = raycast(a, {0, 0, 1}, dir, 80.0);
      auto hb = raycast(b, {0, 0, 1}, dir, 80.0);
      REQUIRE(ha.has_value() == hb.has_value());
      if (ha) {
        CHECK(ha->distance == hb->distance);
        CHECK(ha->actor_id == hb->actor_id);
      }
    }
  }
}

TEST_CASE("path attenuation in clear air is zero") {
  Scene s = scene_with({}, FogField::clear());
  auto p = path_attenuation_sum(s, {0, 0, 1}, {1, 0, 0}, 50.0);
  CHECK(p.optical_depth() == 0.0);
  CHECK(p.transmittance() == 1.0);
}

TEST_CASE("homogeneous MOR 30 over 30 m gives T = 0.05 exactly") {
  Scene s = scene_with({}, FogField::homogeneous_mor(30.0));
  auto p = path_attenuation_sum(s, {0, 0, 1}, {1, 0, 0}, 30.0);
  CHECK(p.optical_depth() == doctest::Approx(std::log(20.0)).epsilon(1e-14));
  CHECK(p.transmittance() == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("voxel grid: two voxels of alpha 0.1 along the ray sum to 0.2") {
  FogField fog;
  fog.mode = FogField::Mode::kVoxelGrid;
  fog.grid.dims = {2, 1, 1};
  fog.grid.origin = {0, -0.5, 0};
  fog.grid.dr = 1.0;
  fog.grid.alpha = {0.1, 0.1};
  Scene s = scene_with({}, fog);
  auto p = path_attenuation_sum(s, {0, 0, 0.5}, {1, 0, 0}, 2.0);
  CHECK(p.optical_depth() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p.transmittance() == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
  CHECK(p.dr == 1.0);
}

TEST_CASE("voxel attenuation matches the closed form for constant alpha in any direction") {
  const double alpha = 0.21;
  FogField fog;
  fog.mode = FogField::Mode::kVoxelGrid;
  fog.grid.dims = {40, 40, 10};
  fog.grid.origin = {-20, -20, 0};
  fog.grid.dr = 1.0;
  fog.grid.alpha.assign(40 * 40 * 10, alpha);
  Scene s = scene_with({}, fog);
  Rng rng(7);
  for (int k = 0; k < 60; ++k) {
    double az = rng.uniform(0, 2 * kPi);
    double el = rng.uniform(-0.3, 0.3);
    double r = rng.uniform(0.5, 12.0);
    auto p = path_attenuation_sum(s, {0, 0, 4}, dir_from_angles(az, el), r);
    CHECK(std::abs(p.optical_depth() - alpha * r) <= alpha * fog.grid.dr + 1e-9);
  }
}

TEST_CASE("rays beyond the world bounds clamp and flag") {
  Scene s = scene_with({}, FogField::homogeneous_mor(100.0));
  s.bounds.lo = {-50, -50, -5};
  s.bounds.hi = {50, 50, 50};
  auto p = path_attenuation_sum(s, {0, 0, 1}, {1, 0, 0}, 500.0);
  CHECK(p.clamped);
  CHECK(p.optical_depth() == doctest::Approx(s.fog.alpha * 50.0).epsilon(1e-9));
}

TEST_CASE("transmittance is non-increasing in range") {
  FogField fog;
  fog.mode = FogField::Mode::kVoxelGrid;
  fog.grid.dims = {30, 1, 1};
  fog.grid.origin = {0, -0.5, 0};
  fog.grid.dr = 1.0;
  Rng rng(11);
  fog.grid.alpha.resize(30);
  for (auto& a : fog.grid.alpha) a = rng.uniform(0.0, 0.4);
  Scene s = scene_with({}, fog);
  double prev = 1.0;
  for (double r = 0.5; r < 35.0; r += 0.5) {
    double t = path_attenuation_sum(s, {0, 0, 0.5}, {1, 0, 0}, r).transmittance();
    CHECK(t <= prev + 1e-15);
    prev = t;
  }
}

TEST_CASE("probe openness: empty scene reports max range everywhere") {
  Scene s = scene_with({});
  auto d = probe_openness(s, Pose{{0, 0, 1.8}, 0, 0}, 12, 80.0);
  REQUIRE(d.size() == 12);
  for (double v : d) CHECK(v == 80.0);
}

TEST_CASE("probe openness: wall on the right, open left") {
  // wall along x at y = -5 (right of a +x-facing sensor)
  Scene s = scene_with({axis_box({0, -5.25, 2}, {80, 0.5, 4}, 0.6)});
  auto d = probe_openness(s, Pose{{0, 0, 1.8}, 0, 0}, 12, 80.0);
  // sector centers near -90 deg look at the wall
  int right = 9;  // sectors of 30 deg: sector 9 spans [270,300)
  CHECK(d[right] < 7.0);
  int left = 3;
  CHECK(d[left] == 80.0);
}

TEST_CASE("probe openness: pitched sensor sees the ground closer behind") {
  Scene s = scene_with({ground()});
  Pose pitched{{0, 0, 1.8}, 0.0, deg2rad(10.0)};
  auto d = probe_openness(s, pitched, 12, 200.0);
  // front sectors tilt upward (no ground hit), rear sectors dive into it
  double front = d[0];
  double rear = d[6];
  CHECK(rear < front);
  CHECK(rear == doctest::Approx(1.8 / std::sin(deg2rad(10.0))).epsilon(0.1));
}

TEST_CASE("scene validation rejects bad primitives") {
  Primitive p = axis_box({0, 0, 0}, {1, 1, 1}, 1.5);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.reflectivity = 0.5;
  p.dims = {0.0, 1, 1};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  Scene s = scene_with({axis_box({900, 0, 0}, {1, 1, 1}, 0.5)});
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("fog profile pieces carry cumulative depth") {
  FogField fog;
  fog.mode = FogField::Mode::kVoxelGrid;
  fog.grid.dims = {3, 1, 1};
  fog.grid.origin = {2, -0.5, 0};
  fog.grid.dr = 1.0;
  fog.grid.alpha = {0.2, 0.0, 0.4};
  Scene s = scene_with({}, fog);
  auto prof = fog_profile(s, {0, 0, 0.5}, {1, 0, 0}, 10.0);
  REQUIRE(!prof.homogeneous);
  CHECK(prof.optical_depth(2.0) == doctest::Approx(0.0));
  CHECK(prof.optical_depth(3.0) == doctest::Approx(0.2));
  CHECK(prof.optical_depth(5.0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(prof.alpha_at(2.5) == 0.2);
  CHECK(prof.alpha_at(4.5) == 0.4);
  CHECK(prof.beta_at(4.5) == doctest::Approx(0.046 * 0.4 / std::log(20.0)));
}
