#include "coopdetect/channel_stats.hpp"

namespace coopdetect {

void RtsLog::record(SimTime start, SimTime end) {
  while (!obs_.empty() && obs_.front().end < start - retention_) obs_.pop_front();
  Obs fresh{start, end, false};
  for (auto it = obs_.rbegin(); it != obs_.rend(); ++it) {
    // Records arrive in start order and windows last milliseconds.
    if (it->start < start - 1.0) break;
    if (it->start < end && start < it->end) {
      it->overlapped = true;
      fresh.overlapped = true;
    }
  }
  obs_.push_back(fresh);
}

double RtsLog::overlap_fraction(SimTime window, SimTime now) const {
  std::size_t total = 0;
  std::size_t overlapped = 0;
  for (const auto& o : obs_) {
    if (o.end <= now - window || o.end > now) continue;
    ++total;
    if (o.overlapped) ++overlapped;
  }
  return total == 0 ? 0.0 : static_cast<double>(overlapped) / static_cast<double>(total);
}

void CongestionLog::record(SimTime at, bool dropped) {
  while (!attempts_.empty() && attempts_.front().at < at - retention_) attempts_.pop_front();
  attempts_.push_back({at, dropped});
}

double CongestionLog::drop_fraction(SimTime window, SimTime now) const {
  std::size_t total = 0;
  std::size_t dropped = 0;
  for (const auto& a : attempts_) {
    if (a.at <= now - window || a.at > now) continue;
    ++total;
    if (a.dropped) ++dropped;
  }
  return total == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(total);
}

}  // namespace coopdetect
