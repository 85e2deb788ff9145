#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

namespace ringkit::transport {

/// Virtual-time event queue. Events at equal times fire in scheduling order;
/// an event scheduled in the past fires at the current instant.
class EventLoop {
 public:
  explicit EventLoop(std::int64_t start_us) : now_us_(start_us) {}

  std::int64_t now() const noexcept { return now_us_; }

  void schedule_at(std::int64_t at_us, std::function<void()> fn) {
    queue_.push(Event{at_us < now_us_ ? now_us_ : at_us, counter_++, std::move(fn)});
  }

  std::optional<std::int64_t> next_time() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().at_us;
  }

  /// Moves the clock forward without firing anything.
  void set_now(std::int64_t t_us) noexcept {
    if (t_us > now_us_) now_us_ = t_us;
  }

  /// Fires the earliest event if it is due at or before `limit_us`.
  bool fire_next(std::int64_t limit_us) {
    if (queue_.empty() || queue_.top().at_us > limit_us) return false;
    auto fn = std::move(const_cast<Event&>(queue_.top()).fn);
    set_now(queue_.top().at_us);
    queue_.pop();
    fn();
    return true;
  }

  std::size_t pending() const noexcept { return queue_.size(); }

 private:
  struct Event {
    std::int64_t at_us;
    std::uint64_t order;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      return a.at_us != b.at_us ? a.at_us > b.at_us : a.order > b.order;
    }
  };

  std::int64_t now_us_;
  std::uint64_t counter_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

}  // namespace ringkit::transport
