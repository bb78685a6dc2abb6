// SPDX-License-Identifier: Apache-2.0
#include "fogsim/bridge.hpp"

#include <chrono>
#include <cstring>
#include <thread>

namespace fogsim::bridge {

namespace {

struct ByteWriter {
  std::vector<std::uint8_t> buf;
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void f64(double v) { raw(&v, 8); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void u8(std::uint8_t v) { raw(&v, 1); }
};

struct ByteReader {
  const std::uint8_t* p;
  const std::uint8_t* end;
  explicit ByteReader(const std::vector<std::uint8_t>& b) : p(b.data()), end(b.data() + b.size()) {}
  void raw(void* out, std::size_t n) {
    if (p + n > end) throw sync::ProtocolError("truncated payload");
    std::memcpy(out, p, n);
    p += n;
  }
  double f64() { double v; raw(&v, 8); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
};

void write_pose(ByteWriter& w, const Pose& p) {
  w.f64(p.position.x);
  w.f64(p.position.y);
  w.f64(p.position.z);
  w.f64(p.yaw);
  w.f64(p.pitch);
}

Pose read_pose(ByteReader& r) {
  Pose p;
  p.position.x = r.f64();
  p.position.y = r.f64();
  p.position.z = r.f64();
  p.yaw = r.f64();
  p.pitch = r.f64();
  return p;
}

}  // namespace

std::vector<std::uint8_t> encode_sensor_frame(const lidar::PointCloud& cloud,
                                              const Pose& ego_pose, double ego_speed) {
  ByteWriter w;
  w.u64(cloud.frame);
  write_pose(w, cloud.sensor_pose);
  write_pose(w, ego_pose);
  w.f64(ego_speed);
  w.u32(static_cast<std::uint32_t>(cloud.points.size()));
  for (const auto& pt : cloud.points) {
    w.f64(pt.position.x);
    w.f64(pt.position.y);
    w.f64(pt.position.z);
    w.f64(pt.intensity);
    w.i32(pt.channel);
    w.f64(pt.azimuth_deg);
    w.u8(static_cast<std::uint8_t>(pt.provenance));
    w.u8(pt.actor_id ? 1 : 0);
    w.u32(pt.actor_id.value_or(0));
    w.u8(pt.true_range ? 1 : 0);
    w.f64(pt.true_range.value_or(0.0));
  }
  return std::move(w.buf);
}

void decode_sensor_frame(const std::vector<std::uint8_t>& buf, lidar::PointCloud& cloud,
                         Pose& ego_pose, double& ego_speed) {
  ByteReader r(buf);
  cloud.frame = r.u64();
  cloud.sensor_pose = read_pose(r);
  ego_pose = read_pose(r);
  ego_speed = r.f64();
  std::uint32_t n = r.u32();
  cloud.points.clear();
  cloud.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    lidar::LidarPoint pt;
    pt.position.x = r.f64();
    pt.position.y = r.f64();
    pt.position.z = r.f64();
    pt.intensity = r.f64();
    pt.channel = r.i32();
    pt.azimuth_deg = r.f64();
    pt.provenance = static_cast<lidar::Provenance>(r.u8());
    bool has_actor = r.u8() != 0;
    std::uint32_t actor = r.u32();
    if (has_actor) pt.actor_id = actor;
    bool has_range = r.u8() != 0;
    double range = r.f64();
    if (has_range) pt.true_range = range;
    cloud.points.push_back(pt);
  }
}

std::vector<std::uint8_t> encode_ads_output(const world::AdsCore::Output& out) {
  ByteWriter w;
  w.f64(out.cmd.throttle);
  w.f64(out.cmd.brake);
  w.f64(out.cmd.steer);
  w.f64(out.route_progress);
  w.u32(static_cast<std::uint32_t>(out.detections.size()));
  for (const auto& d : out.detections) {
    w.f64(d.center.x);
    w.f64(d.center.y);
    w.f64(d.center.z);
    w.f64(d.extent.x);
    w.f64(d.extent.y);
    w.f64(d.extent.z);
    w.i32(d.point_count);
    w.f64(d.fog_fraction);
  }
  return std::move(w.buf);
}

world::AdsCore::Output decode_ads_output(const std::vector<std::uint8_t>& buf) {
  ByteReader r(buf);
  world::AdsCore::Output out;
  out.cmd.throttle = r.f64();
  out.cmd.brake = r.f64();
  out.cmd.steer = r.f64();
  out.route_progress = r.f64();
  std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    perception::Detection d;
    d.center.x = r.f64();
    d.center.y = r.f64();
    d.center.z = r.f64();
    d.extent.x = r.f64();
    d.extent.y = r.f64();
    d.extent.z = r.f64();
    d.point_count = r.i32();
    d.fog_fraction = r.f64();
    out.detections.push_back(d);
  }
  return out;
}

namespace {

void ads_federate_loop(sync::FederateLink& link, const world::ScenarioConfig& scenario,
                       const world::EpisodeSettings& settings, double* ads_virtual_end) {
  world::AdsCore ads(scenario, settings);
  sync::FederateClock clock;
  std::optional<sync::SyncMessage> pending;
  while (auto msg = link.recv()) {
    if (msg->kind == sync::MsgKind::kData) {
      pending = std::move(*msg);
      continue;
    }
    if (msg->kind != sync::MsgKind::kTag) continue;
    clock.on_tag(*msg);
    if (!pending) continue;
    lidar::PointCloud cloud;
    Pose ego_pose;
    double ego_speed = 0.0;
    decode_sensor_frame(pending->payload, cloud, ego_pose, ego_speed);
    std::uint64_t frame = pending->frame;
    pending.reset();
    // all ADS-side time awareness flows from the granted virtual clock
    auto out = ads.process(cloud, ego_pose, ego_speed, frame, sync::virtual_now(clock));
    sync::SyncMessage reply;
    reply.kind = sync::MsgKind::kData;
    reply.frame = frame;
    reply.time = frame * settings.dt;
    reply.payload = encode_ads_output(out);
    link.send(reply);
    sync::SyncMessage tar;
    tar.kind = sync::MsgKind::kTar;
    tar.frame = frame + 2;
    tar.time = tar.frame * settings.dt;
    link.send(tar);
  }
  *ads_virtual_end = sync::virtual_now(clock);
  link.close();
}

world::AdsCore::Output exchange_frame(sync::FederateLink& link, sync::FederateClock& clock,
                                      const world::EpisodeSettings& settings,
                                      const lidar::PointCloud& cloud, const Pose& ego_pose,
                                      double ego_speed, std::uint64_t frame) {
  sync::SyncMessage data;
  data.kind = sync::MsgKind::kData;
  data.frame = frame;
  data.time = frame * settings.dt;
  data.payload = encode_sensor_frame(cloud, ego_pose, ego_speed);
  link.send(data);
  sync::SyncMessage tar;
  tar.kind = sync::MsgKind::kTar;
  tar.frame = frame + 1;
  tar.time = tar.frame * settings.dt;
  link.send(tar);

  std::optional<world::AdsCore::Output> out;
  bool got_tag = false;
  while (!(out && got_tag)) {
    auto msg = link.recv();
    if (!msg) throw sync::ProtocolError("session closed mid-frame");
    if (msg->kind == sync::MsgKind::kData)
      out = decode_ads_output(msg->payload);
    else if (msg->kind == sync::MsgKind::kTag) {
      clock.on_tag(*msg);
      got_tag = true;
    }
  }
  return *out;
}

}  // namespace

SyncEpisodeResult run_episode_sync(const world::ScenarioConfig& scenario,
                                   const world::EpisodeSettings& settings, Transport transport,
                                   double per_frame_delay_s) {
  SyncEpisodeResult result;
  auto t0 = std::chrono::steady_clock::now();

  auto run_with_links = [&](sync::FederateLink& sim_link,
                            std::unique_ptr<sync::FederateLink> ads_link_owned,
                            sync::FederateLink& ads_link) {
    std::thread ads_thread(ads_federate_loop, std::ref(ads_link), std::cref(scenario),
                           std::cref(settings), &result.ads_virtual_end);
    sync::FederateClock sim_clock;
    result.stats = world::run_episode_with_stack(
        scenario, settings,
        [&](const lidar::PointCloud& cloud, const Pose& pose, double speed, std::uint64_t frame) {
          if (per_frame_delay_s > 0.0)
            std::this_thread::sleep_for(std::chrono::duration<double>(per_frame_delay_s));
          return exchange_frame(sim_link, sim_clock, settings, cloud, pose, speed, frame);
        });
    result.sim_virtual_end = sync::virtual_now(sim_clock);
    sim_link.close();
    ads_thread.join();
    (void)ads_link_owned;
  };

  if (transport == Transport::kInProc) {
    sync::InProcSession session(settings.dt);
    run_with_links(session.sim_link(), nullptr, session.ads_link());
    result.session = session.finish();
  } else {
    sync::SocketSession session(settings.dt);
    auto sim_link = session.connect();
    auto ads_link = session.connect();
    auto& ads_ref = *ads_link;
    run_with_links(*sim_link, std::move(ads_link), ads_ref);
    result.session = session.finish();
  }

  result.wall_elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.ratio = sync::ratio_report(result.session.log, result.wall_elapsed);
  return result;
}

}  // namespace fogsim::bridge
