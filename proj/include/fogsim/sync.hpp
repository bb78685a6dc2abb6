// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fogsim::sync {

enum class MsgKind { kTar, kTag, kData };

const char* kind_name(MsgKind k);

struct SyncMessage {
  MsgKind kind = MsgKind::kData;
  std::uint64_t frame = 0;
  double time = 0.0;  // must equal frame * dt
  std::vector<std::uint8_t> payload;  // DATA only
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Virtual time of one federate; advances only when a TAG arrives.
struct FederateClock {
  double now = 0.0;
  double granted_until = 0.0;

  void on_tag(const SyncMessage& tag) {
    granted_until = tag.time;
    now = tag.time;
  }
};

inline double virtual_now(const FederateClock& c) { return c.now; }

// ---- wire format: little-endian u32 length, then a JSON object ----
std::vector<std::uint8_t> encode_frame(const SyncMessage& m);
// consumes one frame from the front of `buf` if complete
std::optional<SyncMessage> decode_frame(std::vector<std::uint8_t>& buf);

inline constexpr const char* kSimFederate = "sim";
inline constexpr const char* kAdsFederate = "ads";

struct RouteEntry {
  std::string to;
  SyncMessage msg;
};

struct SessionLogEntry {
  std::uint64_t seq = 0;
  std::string from, to;
  MsgKind kind = MsgKind::kData;
  std::uint64_t frame = 0;
  double time = 0.0;
  std::uint64_t payload_size = 0;
};

// Table-driven lockstep router between exactly two federates.
//   sim:  DATA(n) then TAR(n+1)  ->  DATA(n), TAG(n+1) to ads
//   ads:  DATA(n) then TAR(n+2)  ->  DATA(n), TAG(n+1) to sim
class RtiCore {
 public:
  explicit RtiCore(double dt);

  void join(const std::string& federate);
  bool session_ready() const { return sim_joined_ && ads_joined_; }

  std::vector<RouteEntry> route(const SyncMessage& msg, const std::string& from);

  const std::vector<SessionLogEntry>& log() const { return log_; }
  const std::vector<double>& wall_receive_times() const { return wall_times_; }
  double dt() const { return dt_; }

 private:
  double dt_;
  bool sim_joined_ = false, ads_joined_ = false;
  std::optional<SyncMessage> pending_sim_, pending_ads_;
  std::uint64_t next_tar_sim_ = 1;
  std::uint64_t next_tar_ads_ = 2;
  std::uint64_t seq_ = 0;
  std::vector<SessionLogEntry> log_;
  std::vector<double> wall_times_;
};

struct RatioReport {
  double r_ads = 0.0;  // T_sim / T_ADS from the virtual clocks
  double r_wall = 0.0; // T_sim / T_wall, diagnostic only
};

RatioReport ratio_report(const std::vector<SessionLogEntry>& log, double wall_elapsed_s);

// Non-decreasing delivery timestamps and strict DATA/TAG alternation per
// federate; used by tests and the session validator.
bool lockstep_alternation_ok(const std::vector<SessionLogEntry>& log, std::string* why = nullptr);

// ---- transports ----

// Blocking message pipe endpoint used by federate threads.
class FederateLink {
 public:
  virtual ~FederateLink() = default;
  virtual void send(const SyncMessage& m) = 0;
  virtual std::optional<SyncMessage> recv() = 0;  // nullopt once the session closes
  virtual void close() = 0;
};

struct SessionResult {
  std::vector<SessionLogEntry> log;
  std::vector<double> wall_times;
};

// In-process transport: federates exchange messages with an RTI loop running
// on a dedicated thread.
class InProcSession {
 public:
  explicit InProcSession(double dt);
  ~InProcSession();
  FederateLink& sim_link();
  FederateLink& ads_link();
  SessionResult finish();  // joins the routing thread

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// TCP loopback transport with the length-prefixed wire format. The first
// connection accepted is the simulator, the second the ADS.
class SocketSession {
 public:
  explicit SocketSession(double dt, const std::string& bind_addr = "127.0.0.1", int port = 0);
  ~SocketSession();
  int port() const;
  // connect a federate client; call once per federate in sim, ads order
  std::unique_ptr<FederateLink> connect();
  SessionResult finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fogsim::sync
