#include "coopdetect/event_loop.hpp"

#include <stdexcept>
#include <string>

namespace coopdetect {

EventHandle EventLoop::schedule_at(SimTime at, Callback cb) {
  if (!(at >= now_)) {
    throw std::invalid_argument("cannot schedule event at t=" + std::to_string(at) + " before clock " +
                                std::to_string(now_));
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push(Entry{at, seq, std::move(cb)});
  live_.insert(seq);
  return EventHandle{seq};
}

bool EventLoop::cancel(EventHandle h) {
  if (live_.erase(h.seq) == 0) return false;
  cancelled_.insert(h.seq);
  return true;
}

bool EventLoop::step() {
  while (!queue_.empty()) {
    const Entry& top = queue_.top();
    if (cancelled_.erase(top.seq) != 0) {
      queue_.pop();
      continue;
    }
    if (top.at > end_time_) return false;
    Callback cb = std::move(top.cb);
    now_ = top.at;
    live_.erase(top.seq);
    queue_.pop();
    ++fired_;
    cb();
    return true;
  }
  return false;
}

std::uint64_t EventLoop::run() {
  const std::uint64_t before = fired_;
  while (step()) {
  }
  return fired_ - before;
}

}  // namespace coopdetect
