#include "coopdetect/monitor.hpp"

#include <algorithm>
#include <cmath>

namespace coopdetect {

Resolution resolve_watch(const WatchEntry& entry, const ForwardObservation& obs) {
  if (!obs.overheard_digest) return Resolution::kDropSuspected;
  return *obs.overheard_digest == entry.expected_digest ? Resolution::kConfirmed : Resolution::kModified;
}

double p_malicious(double p_congestion, double p_collision, double p_timeout) {
  return std::clamp(1.0 - (p_congestion + p_collision + p_timeout), 0.0, 1.0);
}

double evidence_growth(double dropped, double p_mal, double lambda, double d_cap) {
  if (dropped <= 0.0 || p_mal <= 0.0) return 0.0;
  const double d = std::min(dropped, d_cap);
  const double shape = std::expm1(lambda * d) / std::expm1(lambda * d_cap);
  return std::clamp(p_mal * shape, 0.0, 1.0);
}

double suspicion_step(double previous, double growth, double alpha1, double alpha2) {
  return std::clamp(alpha1 * previous + alpha2 * growth, 0.0, 1.0);
}

std::optional<WatchEntry> Monitor::watch_sent(const Packet& packet, NodeId next_hop, SimTime now) {
  if (next_hop == packet.dst) return std::nullopt;
  if (!rng_.bernoulli(params_.p1)) return std::nullopt;
  WatchEntry e{packet.packet_id, next_hop, packet.content_digest, now + params_.forward_timeout, WatchOrigin::kSent};
  auto [it, inserted] = entries_.emplace(std::make_pair(packet.packet_id, next_hop), e);
  if (!inserted) return std::nullopt;
  auto& st = states_[next_hop];
  ++st.watched;
  ++st.total_watched;
  return e;
}

std::optional<WatchEntry> Monitor::watch_overheard(const Packet& packet, NodeId transmitter, NodeId next_hop,
                                                   bool next_hop_in_range, SimTime now) {
  if (!next_hop_in_range || next_hop == packet.dst || next_hop == self_ || transmitter == self_) return std::nullopt;
  if (!rng_.bernoulli(params_.p2)) return std::nullopt;
  WatchEntry e{packet.packet_id, next_hop, packet.content_digest, now + params_.forward_timeout,
               WatchOrigin::kOverheard};
  auto [it, inserted] = entries_.emplace(std::make_pair(packet.packet_id, next_hop), e);
  if (!inserted) return std::nullopt;
  auto& st = states_[next_hop];
  ++st.watched;
  ++st.total_watched;
  return e;
}

std::optional<Resolution> Monitor::observe_forward(NodeId forwarder, const Packet& packet, SimTime now) {
  auto it = entries_.find({packet.packet_id, forwarder});
  if (it == entries_.end()) return std::nullopt;
  ForwardObservation obs;
  // A forward heard after the deadline counts as a timeout.
  if (now <= it->second.deadline) obs.overheard_digest = packet.content_digest;
  const Resolution r = resolve_watch(it->second, obs);
  entries_.erase(it);
  apply(forwarder, r);
  return r;
}

std::size_t Monitor::expire(SimTime now) {
  std::size_t n = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.deadline < now) {
      apply(it->second.watched_forwarder, Resolution::kDropSuspected);
      it = entries_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  return n;
}

void Monitor::apply(NodeId forwarder, Resolution r) {
  auto& st = states_[forwarder];
  switch (r) {
    case Resolution::kConfirmed:
      ++st.confirmed;
      ++st.total_confirmed;
      break;
    case Resolution::kDropSuspected:
      ++st.dropped;
      ++st.total_dropped;
      break;
    case Resolution::kModified:
      ++st.modified;
      ++st.total_modified;
      break;
  }
}

void Monitor::record_misbehavior(NodeId node) {
  auto& st = states_[node];
  ++st.watched;
  ++st.total_watched;
  ++st.dropped;
  ++st.total_dropped;
}

double Monitor::estimate_p_malicious(const ChannelEstimates& channel) const {
  return p_malicious(channel.congestion, channel.collision, params_.p_timeout);
}

double Monitor::update_suspicion(NodeId node, double p_mal) {
  auto& st = states_[node];
  st.peak_window_evidence = std::max(st.peak_window_evidence, st.dropped + st.modified);
  const double d = static_cast<double>(st.dropped + st.modified);
  const double f = evidence_growth(d, p_mal, params_.lambda_f, params_.d_cap);
  double next = suspicion_step(st.p, f, params_.alpha1_s, params_.alpha2_s);
  if (st.surveillance) next = std::max(next, st.p);
  st.p = next;
  st.max_p = std::max(st.max_p, next);
  if (next > params_.suspicion_threshold) st.ever_triggered = true;
  // Entries still pending roll into the next window's watched count.
  std::uint64_t pending = 0;
  for (const auto& [key, e] : entries_)
    if (e.watched_forwarder == node) ++pending;
  st.watched = pending;
  st.confirmed = st.dropped = st.modified = 0;
  return next;
}

std::vector<NodeId> Monitor::end_window(SimTime now, const ChannelEstimates& channel) {
  expire(now);
  const double pm = estimate_p_malicious(channel);
  std::vector<NodeId> triggered;
  for (auto& [node, st] : states_) {
    update_suspicion(node, pm);
    if (check_trigger(node)) triggered.push_back(node);
  }
  return triggered;
}

bool Monitor::check_trigger(NodeId node) const {
  auto it = states_.find(node);
  if (it == states_.end()) return false;
  return it->second.p > params_.suspicion_threshold && !it->second.challenge_pending;
}

void Monitor::set_challenge_pending(NodeId node, bool pending) { states_[node].challenge_pending = pending; }

void Monitor::set_surveillance(NodeId node, bool on) { states_[node].surveillance = on; }

void Monitor::note_interaction(NodeId node, SimTime at) {
  auto [it, inserted] = interactions_.try_emplace(node, at);
  if (!inserted) it->second = std::max(it->second, at);
}

std::optional<SimTime> Monitor::last_interaction(NodeId node) const {
  auto it = interactions_.find(node);
  if (it == interactions_.end()) return std::nullopt;
  return it->second;
}

double Monitor::suspicion(NodeId node) const {
  auto it = states_.find(node);
  return it == states_.end() ? 0.0 : it->second.p;
}

const SuspicionState* Monitor::state(NodeId node) const {
  auto it = states_.find(node);
  return it == states_.end() ? nullptr : &it->second;
}

}  // namespace coopdetect
