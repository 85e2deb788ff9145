#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ringkit/gateway/api.hpp"

namespace ringkit::gateway {

/// Per-client queue of serialized messages. When full, the oldest RenderFrame
/// is discarded; other kinds are always kept, so the queue may exceed its
/// capacity while it holds nothing droppable. Order is never changed.
class Outbox {
 public:
  struct Item {
    ApiKind kind;
    std::uint64_t seq;
    std::shared_ptr<const std::string> line;
  };

  explicit Outbox(std::size_t capacity) : capacity_(capacity) {}

  void push(Item item) {
    {
      std::lock_guard lk(mu_);
      if (closed_) return;
      if (q_.size() >= capacity_) {
        const bool incoming_droppable = droppable(item.kind);
        auto it = std::find_if(q_.begin(), q_.end(), [](const Item& i) { return droppable(i.kind); });
        if (it != q_.end()) {
          q_.erase(it);
          ++dropped_;
        } else if (incoming_droppable) {
          ++dropped_;
          return;
        }
      }
      q_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  /// Takes everything queued, waiting up to `timeout` for the first item.
  std::vector<Item> drain(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [this] { return closed_ || !q_.empty(); });
    std::vector<Item> out(std::make_move_iterator(q_.begin()), std::make_move_iterator(q_.end()));
    q_.clear();
    return out;
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lk(mu_);
    return closed_;
  }
  std::size_t size() const {
    std::lock_guard lk(mu_);
    return q_.size();
  }
  std::uint64_t dropped() const {
    std::lock_guard lk(mu_);
    return dropped_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> q_;
  std::size_t capacity_;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

/// Message sequencing, client registry, stream fan-out and the operator role.
class Hub {
 public:
  using ClientId = std::uint64_t;

  explicit Hub(std::size_t queue_capacity = 256) : capacity_(queue_capacity) {}

  /// Stamps a message. Every message, streamed or returned, draws from one sequence.
  ApiMessage make(ApiKind kind, Json body) {
    std::lock_guard lk(mu_);
    return ApiMessage{++seq_, stamp(), kind, std::move(body)};
  }

  /// Stamps and fans out to every attached stream; returns the message.
  ApiMessage publish(ApiKind kind, Json body) {
    std::lock_guard lk(mu_);
    ApiMessage m{++seq_, stamp(), kind, std::move(body)};
    auto line = std::make_shared<const std::string>(m.line());
    for (auto& [_, c] : clients_)
      if (c.outbox) c.outbox->push({kind, m.seq, line});
    return m;
  }

  ClientId add_client(std::string name = {}) {
    std::lock_guard lk(mu_);
    const auto id = ++next_client_;
    clients_[id].name = std::move(name);
    return id;
  }

  bool has_client(ClientId id) const {
    std::lock_guard lk(mu_);
    return clients_.count(id) != 0;
  }

  /// Attaches a fresh stream queue to the client, replacing any previous one.
  std::shared_ptr<Outbox> attach(ClientId id) {
    std::lock_guard lk(mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) throw not_found("unknown client " + std::to_string(id));
    if (it->second.outbox) it->second.outbox->close();
    it->second.outbox = std::make_shared<Outbox>(capacity_);
    return it->second.outbox;
  }

  void detach(ClientId id, const std::shared_ptr<Outbox>& box) {
    std::lock_guard lk(mu_);
    box->close();
    auto it = clients_.find(id);
    if (it != clients_.end() && it->second.outbox == box) it->second.outbox.reset();
  }

  void remove_client(ClientId id) {
    std::lock_guard lk(mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    if (it->second.outbox) it->second.outbox->close();
    clients_.erase(it);
    if (operator_ == id) operator_.reset();
  }

  void close_all() {
    std::lock_guard lk(mu_);
    for (auto& [_, c] : clients_)
      if (c.outbox) c.outbox->close();
  }

  // Operator role: free to claim when nobody holds it; otherwise only the
  // holder can release it or hand it to another registered client.
  void claim(ClientId id) {
    std::lock_guard lk(mu_);
    require_client(id);
    if (operator_ && *operator_ != id)
      throw not_operator("operator role held by client " + std::to_string(*operator_));
    operator_ = id;
  }
  void release(ClientId id) {
    std::lock_guard lk(mu_);
    if (operator_ != id) throw not_operator("client " + std::to_string(id) + " is not the operator");
    operator_.reset();
  }
  void handover(ClientId from, ClientId to) {
    std::lock_guard lk(mu_);
    if (operator_ != from) throw not_operator("client " + std::to_string(from) + " is not the operator");
    require_client(to);
    operator_ = to;
  }
  void require_operator(std::optional<ClientId> id) const {
    std::lock_guard lk(mu_);
    if (!id || operator_ != *id)
      throw not_operator(operator_ ? "operator role held by client " + std::to_string(*operator_)
                                   : std::string("claim the operator role first"));
  }
  std::optional<ClientId> operator_id() const {
    std::lock_guard lk(mu_);
    return operator_;
  }

  Json clients_json() const {
    std::lock_guard lk(mu_);
    Json arr = Json::array();
    for (const auto& [id, c] : clients_)
      arr.push_back({{"client_id", id},
                     {"name", c.name},
                     {"streaming", c.outbox != nullptr},
                     {"dropped", c.outbox ? c.outbox->dropped() : 0},
                     {"operator", operator_ == id}});
    return arr;
  }

  std::uint64_t last_seq() const {
    std::lock_guard lk(mu_);
    return seq_;
  }

 private:
  struct Client {
    std::string name;
    std::shared_ptr<Outbox> outbox;
  };

  // Wall clock, held monotone across clock steps.
  std::int64_t stamp() {
    last_ts_ = std::max(last_ts_, wall_us());
    return last_ts_;
  }

  void require_client(ClientId id) const {
    if (!clients_.count(id)) throw not_found("unknown client " + std::to_string(id));
  }

  mutable std::mutex mu_;
  std::size_t capacity_;
  std::uint64_t seq_ = 0;
  std::int64_t last_ts_ = 0;
  ClientId next_client_ = 0;
  std::map<ClientId, Client> clients_;
  std::optional<ClientId> operator_;
};

}  // namespace ringkit::gateway
