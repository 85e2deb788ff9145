#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/mac.hpp"
#include "ringkit/proto/wire.hpp"
#include "ringkit/ringsim/ring.hpp"
#include "ringkit/transport/event_loop.hpp"
#include "ringkit/transport/link_params.hpp"

namespace ringkit::transport {

inline constexpr std::int64_t kDefaultStartUs = 1'767'225'600'000'000;  // 2026-01-01T00:00:00Z
inline constexpr double kRssiSigmaDb = 2.0;
inline constexpr int kRssiMin = -100;
inline constexpr int kRssiMax = -30;

struct Advertisement {
  std::string name;
  MacAddress mac;
  int rssi_dbm = 0;
  std::uint8_t battery_pct = 0;
  std::string fw_version;
};

/// A notify-channel frame as seen by the host.
struct Notification {
  std::int64_t sent_us = 0;
  std::int64_t arrival_us = 0;
  std::variant<proto::StreamPacket, proto::DeviceEvent> what;
};
using NotifyHandler = std::function<void(const Notification&)>;

struct LinkStats {
  std::uint64_t attempts = 0;
  std::uint64_t retries = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t notify_sent = 0;
  std::uint64_t notify_dropped = 0;
  std::uint64_t notify_delivered = 0;
  std::uint64_t bulk_bytes = 0;
  std::vector<std::int64_t> rtt_us;
};

enum class LinkState { Connected, Disconnected };

class Environment;

namespace detail {
struct LinkCore {
  MacAddress mac;
  LinkParams params;
  std::mt19937_64 rng;
  LinkState state = LinkState::Connected;
  bool paused = false;
  std::int64_t notify_tail_us = 0;  // FIFO: no delivery before the previous one
  std::map<int, NotifyHandler> handlers;
  int next_handler = 0;
  LinkStats stats;
};
}  // namespace detail

class Link;

/// One delivered bulk chunk plus its virtual arrival time.
struct BulkChunk {
  proto::Chunk chunk;
  std::int64_t arrival_us = 0;
};

/// Reliable, ordered, rate-limited byte stream over an open file.
class BulkStream {
 public:
  /// Next chunk, or nullopt at end of file. Throws Disconnected on an injected drop.
  std::optional<BulkChunk> next();
  std::uint64_t offset() const noexcept { return offset_; }
  std::int64_t started_us() const noexcept { return started_us_; }

 private:
  friend class Link;
  BulkStream(Environment* env, std::shared_ptr<detail::LinkCore> core, std::uint16_t file_id,
             std::uint64_t offset, std::uint64_t size, std::int64_t started_us)
      : env_(env), core_(std::move(core)), file_id_(file_id), offset_(offset), size_(size), started_us_(started_us) {}

  Environment* env_;
  std::shared_ptr<detail::LinkCore> core_;
  std::uint16_t file_id_;
  std::uint64_t offset_;
  std::uint64_t size_;
  std::int64_t started_us_;
  std::uint64_t sent_ = 0;
  std::size_t index_ = 0;
};

/// Host handle to a connection. Cheap to copy; the Environment must outlive it.
class Link {
 public:
  const MacAddress& mac() const noexcept { return core_->mac; }
  LinkState state() const noexcept { return core_->state; }
  bool connected() const noexcept { return core_->state == LinkState::Connected; }
  const LinkParams& params() const noexcept { return core_->params; }
  LinkParams& params() noexcept { return core_->params; }
  const LinkStats& stats() const noexcept { return core_->stats; }
  Environment& env() const noexcept { return *env_; }

  /// Command channel: one request in flight, retried on loss.
  proto::Response request(const proto::Command& cmd);

  int subscribe(NotifyHandler h) {
    core_->handlers.emplace(core_->next_handler, std::move(h));
    return core_->next_handler++;
  }
  void unsubscribe(int token) { core_->handlers.erase(token); }
  /// While paused, notifications are discarded on arrival; sequence numbers
  /// keep counting on the device, so the host sees a gap.
  void pause_notify() noexcept { core_->paused = true; }
  void resume_notify() noexcept { core_->paused = false; }
  bool notify_paused() const noexcept { return core_->paused; }

  /// Bulk channel over a file already opened with OpenFile.
  BulkStream bulk_read(std::uint16_t file_id, std::uint64_t offset, std::uint64_t size);

  void close();

 private:
  friend class Environment;
  Link(Environment* env, std::shared_ptr<detail::LinkCore> core) : env_(env), core_(std::move(core)) {}
  Environment* env_;
  std::shared_ptr<detail::LinkCore> core_;
};

/// The radio world: virtual rings, the event loop that carries frames between
/// them and the host, and the links. Single-threaded; callers serialize access.
class Environment {
 public:
  explicit Environment(std::uint64_t seed = 1, std::int64_t start_us = kDefaultStartUs)
      : seed_(seed), loop_(start_us), scan_rng_(seed ^ 0x5ca9'5ca9'5ca9'5ca9ULL) {}

  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  std::int64_t now() const noexcept { return loop_.now(); }
  std::uint64_t seed() const noexcept { return seed_; }
  EventLoop& loop() noexcept { return loop_; }

  LinkParams& default_params() noexcept { return defaults_; }
  void set_default_params(LinkParams p) {
    p.validate();
    defaults_ = std::move(p);
  }

  /// Registers a ring. It boots at `boot_us` (default: now) and is advanced to now.
  ringsim::Ring& add_ring(ringsim::RingOptions opts, double base_rssi_dbm = -60.0,
                          std::optional<std::int64_t> boot_us = std::nullopt) {
    const auto mac = opts.mac;
    if (rings_.count(mac)) throw Error(Errc::BadArgument, "duplicate mac " + mac.to_string());
    auto slot = std::make_unique<Slot>();
    slot->ring = std::make_unique<ringsim::Ring>(std::move(opts), boot_us.value_or(now()));
    slot->base_rssi = base_rssi_dbm;
    auto& ring = *slot->ring;
    rings_.emplace(mac, std::move(slot));
    if (ring.now_us() < now()) {
      std::vector<ringsim::Emission> discard;
      ring.advance_to(now(), discard);
    }
    return ring;
  }

  ringsim::Ring* find(const MacAddress& mac) {
    auto it = rings_.find(mac);
    return it == rings_.end() ? nullptr : it->second->ring.get();
  }
  ringsim::Ring& ring(const MacAddress& mac) {
    if (auto* r = find(mac)) return *r;
    throw Error(Errc::UnknownDevice, mac.to_string());
  }
  std::vector<MacAddress> macs() const {
    std::vector<MacAddress> out;
    for (const auto& [mac, _] : rings_) out.push_back(mac);
    return out;
  }

  /// Listens for `duration` of virtual time; one advertisement per powered ring,
  /// in registry (mac) order.
  std::vector<Advertisement> scan(std::chrono::microseconds duration = std::chrono::seconds(1)) {
    run_for(duration);
    std::vector<Advertisement> out;
    std::normal_distribution<double> n(0.0, kRssiSigmaDb);
    for (auto& [mac, slot] : rings_) {
      auto& r = *slot->ring;
      if (!r.powered()) continue;
      const double rssi = std::clamp(slot->base_rssi + n(scan_rng_), double(kRssiMin), double(kRssiMax));
      out.push_back(Advertisement{r.name(), mac, static_cast<int>(std::lround(rssi)), r.battery().percent(),
                                  r.options().firmware});
    }
    return out;
  }

  Link connect(const MacAddress& mac) { return connect(mac, defaults_); }

  Link connect(const MacAddress& mac, LinkParams params) {
    params.validate();
    auto* slot = find_slot(mac);
    if (!slot || !slot->ring->powered()) throw Error(Errc::UnknownDevice, mac.to_string());
    if (slot->link && slot->link->state == LinkState::Connected)
      throw Error(Errc::AlreadyConnected, mac.to_string());
    auto core = std::make_shared<detail::LinkCore>();
    core->mac = mac;
    core->params = std::move(params);
    std::seed_seq sq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                     static_cast<std::uint32_t>(mac.to_u64()), static_cast<std::uint32_t>(connections_++)};
    core->rng.seed(sq);
    core->notify_tail_us = now();
    slot->link = core;
    return Link(this, std::move(core));
  }

  void disconnect(const MacAddress& mac) {
    if (auto* slot = find_slot(mac); slot && slot->link) {
      slot->link->state = LinkState::Disconnected;
      slot->link.reset();
    }
  }

  bool is_connected(const MacAddress& mac) {
    auto* slot = find_slot(mac);
    return slot && slot->link && slot->link->state == LinkState::Connected;
  }

  void run_for(std::chrono::microseconds d) { run_until(now() + d.count()); }
  void run_until(std::int64_t t_us) {
    run_until(t_us, [] { return false; });
  }

  /// Advances virtual time to t_us, stepping every ring and firing link events
  /// in time order. Returns early (true) as soon as `done` holds.
  template <typename Pred>
  bool run_until(std::int64_t t_us, Pred&& done) {
    if (t_us < now()) t_us = now();
    while (true) {
      if (done()) return true;
      std::int64_t target = t_us;
      if (auto q = loop_.next_time()) target = std::min(target, *q);
      for (auto& [mac, slot] : rings_)
        if (auto b = slot->ring->next_boundary()) target = std::min(target, std::max(*b, now()));
      step_rings(target);
      loop_.set_now(target);
      bool fired = false;
      while (loop_.fire_next(target)) {
        fired = true;
        if (done()) return true;
      }
      if (target >= t_us && !fired) {
        // Nothing left at the deadline itself.
        if (!loop_.next_time() || *loop_.next_time() > t_us) return done();
      }
    }
  }

 private:
  friend class Link;
  friend class BulkStream;

  struct Slot {
    std::unique_ptr<ringsim::Ring> ring;
    double base_rssi = -60.0;
    std::shared_ptr<detail::LinkCore> link;
  };

  Slot* find_slot(const MacAddress& mac) {
    auto it = rings_.find(mac);
    return it == rings_.end() ? nullptr : it->second.get();
  }

  void step_rings(std::int64_t target) {
    for (auto& [mac, slot] : rings_) {
      auto& r = *slot->ring;
      if (r.now_us() > target) continue;
      scratch_.clear();
      r.advance_to(target, scratch_);
      for (auto& e : scratch_) route(*slot, r, std::move(e));
    }
  }

  void route(Slot& slot, const ringsim::Ring& r, ringsim::Emission e) {
    auto core = slot.link;
    if (!core || core->state != LinkState::Connected) return;
    // Offline logging keeps the radio asleep; file-table updates are not notified.
    if (std::holds_alternative<proto::LogFileEntry>(e.what)) return;
    if (auto* ev = std::get_if<proto::DeviceEvent>(&e.what);
        ev && ev->code == proto::EventCode::SegmentClosed && r.mode() == ringsim::DeviceMode::Logging)
      return;

    proto::Bytes bytes = std::visit(
        [](const auto& x) -> proto::Bytes {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, proto::StreamPacket>) return proto::encode_frame(proto::packet_frame(x));
          else if constexpr (std::is_same_v<T, proto::DeviceEvent>) return proto::encode_frame(proto::event_frame(x));
          else return {};
        },
        e.what);
    ++core->stats.notify_sent;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (core->params.loss_rate > 0 && u(core->rng) < core->params.loss_rate) {
      ++core->stats.notify_dropped;
      return;
    }
    const auto arrival = std::max(e.at_us + core->params.down.draw(core->rng), core->notify_tail_us);
    core->notify_tail_us = arrival;
    const auto sent = e.at_us;
    loop_.schedule_at(arrival, [core, sent, bytes = std::move(bytes), this] {
      if (core->state != LinkState::Connected) return;
      if (core->paused) {
        ++core->stats.notify_dropped;
        return;
      }
      const auto f = proto::decode_frame(bytes);
      Notification n;
      n.sent_us = sent;
      n.arrival_us = now();
      if (f.kind == proto::FrameKind::StreamData) n.what = proto::decode_packet(f.payload);
      else n.what = proto::decode_event(f.payload);
      ++core->stats.notify_delivered;
      // Handlers may unsubscribe while running.
      auto handlers = core->handlers;
      for (auto& [_, h] : handlers) h(n);
    });
  }

  std::uint64_t seed_;
  EventLoop loop_;
  std::mt19937_64 scan_rng_;
  LinkParams defaults_;
  std::map<MacAddress, std::unique_ptr<Slot>> rings_;
  std::vector<ringsim::Emission> scratch_;
  std::uint64_t connections_ = 0;
};

// --- Link ------------------------------------------------------------------

inline proto::Response Link::request(const proto::Command& cmd) {
  if (!connected()) throw Error(Errc::Disconnected, core_->mac.to_string());
  const auto bytes = proto::encode_frame(proto::command_frame(cmd));
  auto& p = core_->params;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    ++core_->stats.attempts;
    if (attempt > 0) ++core_->stats.retries;
    const auto send = env_->now();
    auto reply = std::make_shared<std::optional<proto::Bytes>>();
    const bool lost = p.loss_rate > 0 && u(core_->rng) < p.loss_rate;
    if (!lost) {
      const auto up = p.up.draw(core_->rng);
      const auto down = p.down.draw(core_->rng);
      auto core = core_;
      Environment* env = env_;
      env_->loop_.schedule_at(send + up, [env, core, bytes, reply, down] {
        if (core->state != LinkState::Connected) return;
        auto* r = env->find(core->mac);
        if (!r || !r->powered()) return;
        auto out = r->handle_frame(bytes);
        if (!out) return;
        env->loop_.schedule_at(env->now() + down, [reply, out = std::move(*out)] { *reply = out; });
      });
    }
    if (env_->run_until(send + p.command_timeout_us, [&] { return reply->has_value(); })) {
      core_->stats.rtt_us.push_back(env_->now() - send);
      return proto::decode_response(proto::decode_frame(**reply));
    }
  }
  ++core_->stats.timeouts;
  throw Error(Errc::Timeout, "no response to " + std::string(proto::to_string(proto::opcode_of(cmd))) + " after " +
                                 std::to_string(p.max_attempts) + " attempts");
}

inline BulkStream Link::bulk_read(std::uint16_t file_id, std::uint64_t offset, std::uint64_t size) {
  if (!connected()) throw Error(Errc::Disconnected, core_->mac.to_string());
  return BulkStream(env_, core_, file_id, offset, size, env_->now());
}

inline void Link::close() { env_->disconnect(core_->mac); }

inline std::optional<BulkChunk> BulkStream::next() {
  if (offset_ >= size_) return std::nullopt;
  if (core_->state != LinkState::Connected) throw Error(Errc::Disconnected, "bulk channel closed");
  auto& p = core_->params;
  std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(proto::kChunkDataSize, size_ - offset_));
  bool drop_after = false;
  if (p.bulk_disconnect_at && offset_ + len >= *p.bulk_disconnect_at) {
    if (*p.bulk_disconnect_at <= offset_) {
      p.bulk_disconnect_at.reset();
      env_->disconnect(core_->mac);
      throw Error(Errc::Disconnected, "bulk link dropped at byte " + std::to_string(offset_));
    }
    len = static_cast<std::size_t>(*p.bulk_disconnect_at - offset_);
    drop_after = true;
  }

  auto& ring = env_->ring(core_->mac);
  env_->run_until(env_->now());
  auto chunk = ring.read_chunk(file_id_, static_cast<std::uint32_t>(offset_), len);
  if (p.bulk_corrupt_chunk && *p.bulk_corrupt_chunk == index_) {
    // Damage happens at the source, so the frame CRC is computed over bad data.
    chunk.data[chunk.data.size() / 2] ^= 0x10;
    p.bulk_corrupt_chunk.reset();
  }
  const auto wire = proto::encode_frame(proto::Frame{proto::FrameKind::Chunk, proto::encode_chunk(chunk)});

  sent_ += chunk.data.size();
  const auto paced = started_us_ + static_cast<std::int64_t>(std::ceil(static_cast<double>(sent_) * 1e6 / p.bulk_bytes_per_s));
  const auto arrival = paced + p.down.mean_us;
  env_->run_until(arrival);

  const auto f = proto::decode_frame(wire);
  BulkChunk out{proto::decode_chunk(f.payload), env_->now()};
  offset_ += out.chunk.data.size();
  ++index_;
  core_->stats.bulk_bytes += out.chunk.data.size();
  if (drop_after) {
    p.bulk_disconnect_at.reset();
    env_->disconnect(core_->mac);
  }
  return out;
}

}  // namespace ringkit::transport
