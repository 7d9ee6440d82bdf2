#pragma once

#include <deque>

#include "coopdetect/types.hpp"

namespace coopdetect {

/// RTS reservations heard by one node. An observation counts as overlapping
/// when its window intersects any other retained observation's window.
class RtsLog {
 public:
  explicit RtsLog(SimTime retention = 60.0) : retention_(retention) {}

  void record(SimTime start, SimTime end);

  /// Overlapping observations / all observations whose window ends within
  /// (now - window, now]; 0 when there are none.
  double overlap_fraction(SimTime window, SimTime now) const;

  std::size_t size() const { return obs_.size(); }

 private:
  struct Obs {
    SimTime start;
    SimTime end;
    bool overlapped;
  };
  SimTime retention_;
  std::deque<Obs> obs_;
};

/// Enqueue attempts at one node's forward queue.
class CongestionLog {
 public:
  explicit CongestionLog(SimTime retention = 60.0) : retention_(retention) {}

  void record(SimTime at, bool dropped);

  /// Overflow drops / enqueue attempts within (now - window, now]; 0 when idle.
  double drop_fraction(SimTime window, SimTime now) const;

 private:
  struct Attempt {
    SimTime at;
    bool dropped;
  };
  SimTime retention_;
  std::deque<Attempt> attempts_;
};

}  // namespace coopdetect
