// SPDX-License-Identifier: Apache-2.0
#include "fogsim/sync.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>

#include <json.hpp>

namespace fogsim::sync {

const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::kTar: return "TAR";
    case MsgKind::kTag: return "TAG";
    case MsgKind::kData: return "DATA";
  }
  return "?";
}

namespace {

double wall_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<std::uint8_t>& in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < in.size(); i += 3) {
    std::uint32_t v = in[i] << 16;
    int rem = static_cast<int>(in.size() - i);
    if (rem > 1) v |= in[i + 1] << 8;
    if (rem > 2) v |= in[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(rem > 1 ? kB64[(v >> 6) & 63] : '=');
    out.push_back(rem > 2 ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> b64_decode(const std::string& in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  int buf = 0, bits = 0;
  for (char c : in) {
    if (c == '=') break;
    int v = val(c);
    if (v < 0) throw ProtocolError("bad base64 payload");
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((buf >> bits) & 0xff));
    }
  }
  return out;
}

MsgKind kind_from_name(const std::string& s) {
  if (s == "TAR") return MsgKind::kTar;
  if (s == "TAG") return MsgKind::kTag;
  if (s == "DATA") return MsgKind::kData;
  throw ProtocolError("unknown message kind: " + s);
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const SyncMessage& m) {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(m.kind);
  j["frame"] = m.frame;
  j["time"] = m.time;
  if (m.kind == MsgKind::kData) j["payload_b64"] = b64_encode(m.payload);
  std::string body = j.dump();
  std::vector<std::uint8_t> out(4 + body.size());
  std::uint32_t len = static_cast<std::uint32_t>(body.size());
  out[0] = static_cast<std::uint8_t>(len & 0xff);
  out[1] = static_cast<std::uint8_t>((len >> 8) & 0xff);
  out[2] = static_cast<std::uint8_t>((len >> 16) & 0xff);
  out[3] = static_cast<std::uint8_t>((len >> 24) & 0xff);
  std::memcpy(out.data() + 4, body.data(), body.size());
  return out;
}

std::optional<SyncMessage> decode_frame(std::vector<std::uint8_t>& buf) {
  if (buf.size() < 4) return std::nullopt;
  std::uint32_t len = buf[0] | (buf[1] << 8) | (buf[2] << 16) |
                      (static_cast<std::uint32_t>(buf[3]) << 24);
  if (len > (64u << 20)) throw ProtocolError("oversized frame");
  if (buf.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  std::string body(reinterpret_cast<const char*>(buf.data() + 4), len);
  buf.erase(buf.begin(), buf.begin() + 4 + static_cast<std::ptrdiff_t>(len));
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("malformed frame body");
  SyncMessage m;
  m.kind = kind_from_name(j.at("kind").get<std::string>());
  m.frame = j.at("frame").get<std::uint64_t>();
  m.time = j.at("time").get<double>();
  if (m.kind == MsgKind::kData) m.payload = b64_decode(j.value("payload_b64", std::string{}));
  return m;
}

RtiCore::RtiCore(double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
}

void RtiCore::join(const std::string& federate) {
  if (federate == kSimFederate)
    sim_joined_ = true;
  else if (federate == kAdsFederate)
    ads_joined_ = true;
  else
    throw ProtocolError("unknown federate: " + federate);
}

std::vector<RouteEntry> RtiCore::route(const SyncMessage& msg, const std::string& from) {
  if (from != kSimFederate && from != kAdsFederate)
    throw ProtocolError("message from unknown federate: " + from);
  if (!session_ready()) throw ProtocolError("message before session start");
  if (msg.time != msg.frame * dt_) throw ProtocolError("timestamp != frame * dt");

  std::vector<RouteEntry> out;
  auto deliver = [&](const std::string& to, const SyncMessage& m) {
    log_.push_back({seq_++, from, to, m.kind, m.frame, m.time,
                    static_cast<std::uint64_t>(m.payload.size())});
    wall_times_.push_back(wall_seconds());
    out.push_back({to, m});
  };

  bool from_sim = from == kSimFederate;
  if (msg.kind == MsgKind::kData) {
    auto& pending = from_sim ? pending_sim_ : pending_ads_;
    if (pending) throw ProtocolError("second DATA without an intervening TAR");
    pending = msg;
    return out;
  }
  if (msg.kind == MsgKind::kTag) throw ProtocolError("federates must not send TAG");

  // TAR
  std::uint64_t& expect = from_sim ? next_tar_sim_ : next_tar_ads_;
  if (msg.frame != expect)
    throw ProtocolError("non-monotonic TAR frame from " + from);
  ++expect;
  std::string to = from_sim ? kAdsFederate : kSimFederate;
  auto& pending = from_sim ? pending_sim_ : pending_ads_;
  if (pending) {
    deliver(to, *pending);
    pending.reset();
  }
  SyncMessage tag;
  tag.kind = MsgKind::kTag;
  tag.frame = from_sim ? msg.frame : msg.frame - 1;
  tag.time = tag.frame * dt_;
  deliver(to, tag);
  return out;
}

RatioReport ratio_report(const std::vector<SessionLogEntry>& log, double wall_elapsed_s) {
  double t_sim = -1.0, t_ads = -1.0;
  for (const auto& e : log) {
    if (e.kind != MsgKind::kTag) continue;
    if (e.to == kSimFederate) t_sim = std::max(t_sim, e.time);
    if (e.to == kAdsFederate) t_ads = std::max(t_ads, e.time);
  }
  if (t_sim < 0.0 || t_ads < 0.0)
    throw std::invalid_argument("session completed zero frames");
  RatioReport r;
  r.r_ads = t_sim / t_ads;
  r.r_wall = wall_elapsed_s > 0.0 ? t_sim / wall_elapsed_s : 0.0;
  return r;
}

bool lockstep_alternation_ok(const std::vector<SessionLogEntry>& log, std::string* why) {
  double last_time[2] = {-1.0, -1.0};
  int data_since_tag[2] = {0, 0};
  bool seen_tag[2] = {false, false};
  for (const auto& e : log) {
    int fed = e.to == kSimFederate ? 0 : 1;
    if (e.time < last_time[fed]) {
      if (why) *why = "timestamp regression toward " + e.to;
      return false;
    }
    last_time[fed] = e.time;
    if (e.kind == MsgKind::kData) {
      ++data_since_tag[fed];
    } else if (e.kind == MsgKind::kTag) {
      if (seen_tag[fed] && data_since_tag[fed] != 1) {
        if (why)
          *why = "expected exactly one DATA between TAGs toward " + e.to + ", saw " +
                 std::to_string(data_since_tag[fed]);
        return false;
      }
      seen_tag[fed] = true;
      data_since_tag[fed] = 0;
    }
  }
  return true;
}

// ---------- in-process transport ----------

namespace {

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::pair<std::string, std::optional<SyncMessage>>> q;  // nullopt = close

  void push(const std::string& from, std::optional<SyncMessage> m) {
    {
      std::lock_guard<std::mutex> lk(mu);
      q.emplace_back(from, std::move(m));
    }
    cv.notify_all();
  }
  std::pair<std::string, std::optional<SyncMessage>> pop() {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return !q.empty(); });
    auto f = std::move(q.front());
    q.pop_front();
    return f;
  }
};

struct Inbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<SyncMessage> q;
  bool closed = false;

  void push(const SyncMessage& m) {
    {
      std::lock_guard<std::mutex> lk(mu);
      q.push_back(m);
    }
    cv.notify_all();
  }
  void close() {
    {
      std::lock_guard<std::mutex> lk(mu);
      closed = true;
    }
    cv.notify_all();
  }
  std::optional<SyncMessage> pop() {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return !q.empty() || closed; });
    if (q.empty()) return std::nullopt;
    SyncMessage m = std::move(q.front());
    q.pop_front();
    return m;
  }
};

}  // namespace

struct InProcSession::Impl {
  RtiCore core;
  Mailbox mailbox;
  Inbox inbox_sim, inbox_ads;
  std::thread loop;
  std::exception_ptr error;

  struct Link : FederateLink {
    Impl* impl;
    std::string name;
    Inbox* inbox;
    bool closed = false;
    Link(Impl* i, std::string n, Inbox* in) : impl(i), name(std::move(n)), inbox(in) {}
    void send(const SyncMessage& m) override { impl->mailbox.push(name, m); }
    std::optional<SyncMessage> recv() override { return inbox->pop(); }
    void close() override {
      if (!closed) {
        closed = true;
        impl->mailbox.push(name, std::nullopt);
      }
    }
  };
  Link sim_link{this, kSimFederate, &inbox_sim};
  Link ads_link{this, kAdsFederate, &inbox_ads};

  explicit Impl(double dt) : core(dt) {
    core.join(kSimFederate);
    core.join(kAdsFederate);
    loop = std::thread([this] { run(); });
  }

  void run() {
    int open = 2;
    while (open > 0) {
      auto [from, msg] = mailbox.pop();
      if (!msg) {
        --open;
        continue;
      }
      try {
        for (auto& [to, m] : core.route(*msg, from))
          (to == kSimFederate ? inbox_sim : inbox_ads).push(m);
      } catch (...) {
        error = std::current_exception();
        break;
      }
    }
    inbox_sim.close();
    inbox_ads.close();
  }
};

InProcSession::InProcSession(double dt) : impl_(std::make_unique<Impl>(dt)) {}
InProcSession::~InProcSession() {
  if (impl_ && impl_->loop.joinable()) {
    impl_->sim_link.close();
    impl_->ads_link.close();
    impl_->loop.join();
  }
}
FederateLink& InProcSession::sim_link() { return impl_->sim_link; }
FederateLink& InProcSession::ads_link() { return impl_->ads_link; }

SessionResult InProcSession::finish() {
  impl_->sim_link.close();
  impl_->ads_link.close();
  if (impl_->loop.joinable()) impl_->loop.join();
  if (impl_->error) std::rethrow_exception(impl_->error);
  return {impl_->core.log(), impl_->core.wall_receive_times()};
}

// ---------- socket transport ----------

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::write(fd, data, len);
    if (n <= 0) throw ProtocolError("socket write failed");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

struct SocketLink : FederateLink {
  int fd = -1;
  std::vector<std::uint8_t> buf;
  explicit SocketLink(int f) : fd(f) {}
  ~SocketLink() override { close(); }
  void send(const SyncMessage& m) override {
    auto bytes = encode_frame(m);
    write_all(fd, bytes.data(), bytes.size());
  }
  std::optional<SyncMessage> recv() override {
    for (;;) {
      if (auto m = decode_frame(buf)) return m;
      std::uint8_t tmp[4096];
      ssize_t n = ::read(fd, tmp, sizeof tmp);
      if (n <= 0) return std::nullopt;
      buf.insert(buf.end(), tmp, tmp + n);
    }
  }
  void close() override {
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
      fd = -1;
    }
  }
};

}  // namespace

struct SocketSession::Impl {
  RtiCore core;
  int listen_fd = -1;
  int port = 0;
  int conn[2] = {-1, -1};
  int accepted = 0;
  std::thread loop;
  std::exception_ptr error;
  std::mutex mu;

  explicit Impl(double dt, const std::string& addr, int want_port) : core(dt) {
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw ProtocolError("cannot create listener socket");
    int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<std::uint16_t>(want_port));
    if (::inet_pton(AF_INET, addr.c_str(), &sa.sin_addr) != 1)
      throw ProtocolError("bad bind address");
    if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
      throw ProtocolError("bind failed");
    if (::listen(listen_fd, 2) != 0) throw ProtocolError("listen failed");
    socklen_t slen = sizeof sa;
    ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&sa), &slen);
    port = ntohs(sa.sin_port);
    loop = std::thread([this] { run(); });
  }

  void run() {
    try {
      // connection order assigns identity: simulator first, then ADS
      for (int i = 0; i < 2; ++i) {
        int fd = ::accept(listen_fd, nullptr, nullptr);
        if (fd < 0) return;
        conn[i] = fd;
        core.join(i == 0 ? kSimFederate : kAdsFederate);
      }
      std::vector<std::uint8_t> bufs[2];
      bool open[2] = {true, true};
      while (open[0] || open[1]) {
        pollfd pfds[2];
        nfds_t n = 0;
        int idx_of[2] = {-1, -1};
        for (int i = 0; i < 2; ++i)
          if (open[i]) {
            pfds[n].fd = conn[i];
            pfds[n].events = POLLIN;
            idx_of[n] = i;
            ++n;
          }
        if (::poll(pfds, n, 1000) < 0) break;
        for (nfds_t k = 0; k < n; ++k) {
          if (!(pfds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
          int i = idx_of[k];
          std::uint8_t tmp[4096];
          ssize_t got = ::read(conn[i], tmp, sizeof tmp);
          if (got <= 0) {
            open[i] = false;
            continue;
          }
          bufs[i].insert(bufs[i].end(), tmp, tmp + got);
          while (auto m = decode_frame(bufs[i])) {
            auto routed = core.route(*m, i == 0 ? kSimFederate : kAdsFederate);
            for (auto& [to, out] : routed) {
              int tidx = to == kSimFederate ? 0 : 1;
              auto bytes = encode_frame(out);
              write_all(conn[tidx], bytes.data(), bytes.size());
            }
          }
        }
      }
    } catch (...) {
      error = std::current_exception();
    }
    for (int i = 0; i < 2; ++i)
      if (conn[i] >= 0) {
        ::shutdown(conn[i], SHUT_RDWR);
        ::close(conn[i]);
        conn[i] = -1;
      }
  }
};

SocketSession::SocketSession(double dt, const std::string& bind_addr, int port)
    : impl_(std::make_unique<Impl>(dt, bind_addr, port)) {}

SocketSession::~SocketSession() {
  if (impl_) {
    if (impl_->listen_fd >= 0) {
      ::shutdown(impl_->listen_fd, SHUT_RDWR);
      ::close(impl_->listen_fd);
      impl_->listen_fd = -1;
    }
    if (impl_->loop.joinable()) impl_->loop.join();
  }
}

int SocketSession::port() const { return impl_->port; }

std::unique_ptr<FederateLink> SocketSession::connect() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError("cannot create client socket");
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(impl_->port));
  ::inet_pton(AF_INET, "127.0.0.1", &sa.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    ::close(fd);
    throw ProtocolError("connect failed");
  }
  return std::make_unique<SocketLink>(fd);
}

SessionResult SocketSession::finish() {
  if (impl_->listen_fd >= 0) {
    ::shutdown(impl_->listen_fd, SHUT_RDWR);
    ::close(impl_->listen_fd);
    impl_->listen_fd = -1;
  }
  if (impl_->loop.joinable()) impl_->loop.join();
  if (impl_->error) std::rethrow_exception(impl_->error);
  return {impl_->core.log(), impl_->core.wall_receive_times()};
}

}  // namespace fogsim::sync
