#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "coopdetect/types.hpp"

namespace coopdetect {

struct EventHandle {
  std::uint64_t seq = 0;
  friend constexpr bool operator==(EventHandle, EventHandle) = default;
};

/// Single-threaded discrete-event engine. Events at equal times fire in
/// insertion order.
class EventLoop {
 public:
  using Callback = std::function<void()>;

  explicit EventLoop(SimTime end_time = kNever) : end_time_(end_time) {}

  SimTime now() const { return now_; }
  SimTime end_time() const { return end_time_; }

  /// Throws std::invalid_argument when `at` is earlier than the clock.
  EventHandle schedule_at(SimTime at, Callback cb);
  EventHandle schedule_in(SimTime delay, Callback cb) { return schedule_at(now_ + delay, std::move(cb)); }

  /// Returns false if the event already fired or was cancelled.
  bool cancel(EventHandle h);

  /// Fires events with time <= end_time in order. Returns the number fired.
  std::uint64_t run();
  /// Fires at most one event; false when nothing is left to fire.
  bool step();

  std::size_t pending() const { return queue_.size() - cancelled_.size(); }
  std::uint64_t fired() const { return fired_; }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    // Mutable so the callback can be moved out of the priority queue top.
    mutable Callback cb;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_ = 0.0;
  SimTime end_time_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t fired_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_set<std::uint64_t> live_;
  std::unordered_set<std::uint64_t> cancelled_;
};

}  // namespace coopdetect
