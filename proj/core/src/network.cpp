#include "coopdetect/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coopdetect {

ContentDigest original_digest(PacketId id, FlowId flow) {
  return Rng::mix(id * 0x100000001b3ULL ^ (static_cast<std::uint64_t>(flow) << 40));
}

std::string_view to_string(PacketFate fate) {
  switch (fate) {
    case PacketFate::kInFlight: return "in_flight";
    case PacketFate::kDelivered: return "delivered";
    case PacketFate::kMaliciousDrop: return "malicious_drop";
    case PacketFate::kCongestionDrop: return "congestion_drop";
    case PacketFate::kCollisionLoss: return "collision_loss";
    case PacketFate::kModified: return "modified";
    case PacketFate::kRouteExpired: return "route_expired";
  }
  return "?";
}

std::string_view to_string(TxOutcome outcome) {
  switch (outcome) {
    case TxOutcome::kDelivered: return "delivered";
    case TxOutcome::kCollided: return "collided";
    case TxOutcome::kQueuedDrop: return "queued_drop";
  }
  return "?";
}

Network::Network(EventLoop& loop, World& world, NetworkParams params, std::uint64_t seed, NetworkHooks hooks,
                 TraceSink* trace)
    : loop_(loop),
      world_(world),
      params_(params),
      hooks_(std::move(hooks)),
      trace_(trace),
      mac_rng_(Rng::stream(seed, rng_purpose::kMac)),
      channel_rng_(Rng::stream(seed, rng_purpose::kChannel)),
      adversaries_(world.size()),
      nodes_(world.size()),
      forward_requests_(world.size(), 0) {
  adversary_rng_.reserve(world.size());
  for (std::size_t i = 0; i < world.size(); ++i) adversary_rng_.push_back(Rng::stream(seed, rng_purpose::kAdversary, i));
}

void Network::add_flow(const Flow& flow) {
  if (flow.src.value >= world_.size() || flow.dst.value >= world_.size())
    throw std::invalid_argument("flow endpoint out of range");
  if (!(flow.rate > 0.0)) throw std::invalid_argument("flow rate must be positive");
  flows_.push_back(flow);
}

void Network::set_adversary(const AdversaryPolicy& policy) {
  if (policy.drop_probability < 0.0 || policy.modify_probability < 0.0 ||
      policy.drop_probability + policy.modify_probability > 1.0 + 1e-12)
    throw std::invalid_argument("adversary probabilities must be >= 0 and sum to <= 1");
  adversaries_.at(policy.node.value) = policy;
}

bool Network::is_adversary(NodeId node) const { return adversaries_.at(node.value).has_value(); }

void Network::start() {
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    const Flow& f = flows_[i];
    loop_.schedule_at(f.start, [this, i] { cbr_tick(i, 0); });
  }
}

void Network::cbr_tick(std::size_t flow_index, std::uint64_t seq) {
  const Flow& f = flows_[flow_index];
  originate(f);
  // floor(rate * duration) + 1 packets, the first at `start`.
  const auto last = static_cast<std::uint64_t>(std::floor(f.rate * (f.stop - f.start) + 1e-9));
  if (seq < last) {
    const SimTime next = f.start + static_cast<double>(seq + 1) / f.rate;
    loop_.schedule_at(next, [this, flow_index, seq] { cbr_tick(flow_index, seq + 1); });
  }
}

PacketId Network::originate(const Flow& flow) {
  Packet p;
  p.packet_id = next_packet_id_++;
  p.flow_id = flow.flow_id;
  p.src = flow.src;
  p.dst = flow.dst;
  p.route = {flow.src};
  p.hop_index = 0;
  p.payload_bytes = flow.payload_bytes;
  p.content_digest = original_digest(p.packet_id, flow.flow_id);
  p.created_at = loop_.now();
  ++totals_.originated;
  if (trace_) trace_->event(loop_.now(), "originate", {{"pkt", p.packet_id}, {"flow", p.flow_id}, {"src", p.src.value}, {"dst", p.dst.value}});
  const PacketId id = p.packet_id;
  if (p.src == p.dst) {
    settle(id, PacketFate::kDelivered);
    return id;
  }
  enqueue(flow.src, std::move(p));
  return id;
}

bool Network::enqueue(NodeId node, Packet packet) {
  NodeState& ns = nodes_.at(node.value);
  const SimTime now = loop_.now();
  if (ns.queue.size() >= params_.queue_capacity) {
    ns.congestion.record(now, true);
    if (trace_) trace_->event(now, "drop", {{"node", node.value}, {"pkt", packet.packet_id}, {"cause", "queued_drop"}});
    if (keep_records_) {
      records_.push_back(TransmissionRecord{node, node, packet.packet_id, now, now, TxOutcome::kQueuedDrop});
    }
    settle(packet.packet_id, PacketFate::kCongestionDrop);
    return false;
  }
  ns.congestion.record(now, false);
  ns.queue.push_back(Queued{std::move(packet), now});
  try_send(node);
  return true;
}

Network::ForwardAction Network::forward_packet(NodeId node, Packet& packet) {
  const auto& adv = adversaries_.at(node.value);
  if (!adv || packet.src == node) return ForwardAction::kForward;
  const double u = adversary_rng_[node.value].uniform01();
  if (u < adv->drop_probability) return ForwardAction::kDrop;
  if (u < adv->drop_probability + adv->modify_probability) {
    packet.content_digest = Rng::mix(packet.content_digest ^ adversary_rng_[node.value].next());
    return ForwardAction::kModify;
  }
  return ForwardAction::kForward;
}

void Network::send_control(NodeId from, std::optional<NodeId> to, std::vector<std::uint8_t> bytes) {
  const SimTime now = loop_.now();
  ++totals_.control_messages;
  auto payload = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
  if (trace_) {
    trace_->event(now, "control", {{"from", from.value},
                                   {"to", to ? nlohmann::json(to->value) : nlohmann::json("*")},
                                   {"bytes", payload->size()}});
  }
  std::vector<NodeId> receivers;
  if (to) {
    if (world_.in_range(from, *to, now)) receivers.push_back(*to);
  } else {
    receivers = world_.neighbors(from, now);
  }
  for (NodeId r : receivers) {
    loop_.schedule_in(params_.control_latency, [this, r, from, payload] {
      if (hooks_.on_control) hooks_.on_control(r, from, *payload);
    });
  }
}

double Network::rts_overlap_fraction(NodeId node, SimTime window, SimTime now) const {
  return nodes_.at(node.value).rts.overlap_fraction(window, now);
}

double Network::local_congestion(NodeId node, SimTime window, SimTime now) const {
  return nodes_.at(node.value).congestion.drop_fraction(window, now);
}

SimTime Network::tx_duration(const Packet& packet) const {
  return static_cast<double>(packet.payload_bytes + params_.header_bytes) * 8.0 / params_.link_rate_bps;
}

Network::Totals Network::totals() const {
  Totals t = totals_;
  std::uint64_t settled = 0;
  for (std::size_t i = 1; i < kPacketFateCount; ++i) settled += t.by_fate[i];
  t.by_fate[static_cast<std::size_t>(PacketFate::kInFlight)] = t.originated - settled;
  return t;
}

PacketFate Network::fate(PacketId id) const {
  auto it = fates_.find(id);
  return it == fates_.end() ? PacketFate::kInFlight : it->second;
}

void Network::settle(PacketId id, PacketFate fate) {
  auto [it, inserted] = fates_.emplace(id, fate);
  if (!inserted) throw std::logic_error("packet settled twice");
  ++totals_.by_fate[static_cast<std::size_t>(fate)];
}

void Network::schedule_retry(NodeId node) {
  NodeState& ns = nodes_[node.value];
  if (ns.retry_pending) return;
  ns.retry_pending = true;
  loop_.schedule_in(params_.route_retry_interval, [this, node] {
    nodes_[node.value].retry_pending = false;
    try_send(node);
  });
}

bool Network::ensure_route(NodeId node, Packet& packet) {
  const SimTime now = loop_.now();
  auto excluded = [&](NodeId candidate) { return hooks_.route_excluded && hooks_.route_excluded(node, candidate); };
  if (packet.has_next_hop()) {
    const NodeId next = packet.next_hop();
    if (world_.in_range(node, next, now) && !(next != packet.dst && excluded(next))) return true;
  }
  auto fresh = compute_route(world_.adjacency(now), node, packet.dst, excluded);
  if (!fresh) return false;
  packet.route.resize(packet.hop_index + 1);
  packet.route.insert(packet.route.end(), fresh->begin() + 1, fresh->end());
  return true;
}

std::optional<std::size_t> Network::select_ready(NodeId node) {
  NodeState& ns = nodes_[node.value];
  const SimTime now = loop_.now();
  for (std::size_t i = 0; i < ns.queue.size();) {
    Queued& q = ns.queue[i];
    if (now - q.enqueued_at > params_.route_hold_timeout) {
      if (trace_) trace_->event(now, "drop", {{"node", node.value}, {"pkt", q.packet.packet_id}, {"cause", "route_expired"}});
      settle(q.packet.packet_id, PacketFate::kRouteExpired);
      ns.queue.erase(ns.queue.begin() + static_cast<std::ptrdiff_t>(i));
      continue;
    }
    if (ensure_route(node, q.packet)) return i;
    ++i;
  }
  return std::nullopt;
}

SimTime Network::medium_busy_until(NodeId node) const {
  SimTime until = loop_.now();
  for (const auto& [id, tx] : active_) {
    if (tx.sender == node || std::find(tx.hearers.begin(), tx.hearers.end(), node) != tx.hearers.end())
      until = std::max(until, tx.end);
  }
  return until;
}

void Network::try_send(NodeId node) {
  NodeState& ns = nodes_[node.value];
  if (ns.transmitting || ns.attempt_pending || ns.queue.empty()) return;
  if (!select_ready(node)) {
    if (!ns.queue.empty()) schedule_retry(node);
    return;
  }
  ns.attempt_pending = true;
  const double slots = static_cast<double>(mac_rng_.below(params_.backoff_slots + 1));
  const SimTime at = medium_busy_until(node) + params_.difs + slots * params_.backoff_slot;
  loop_.schedule_at(at, [this, node] { attempt(node); });
}

void Network::attempt(NodeId node) {
  NodeState& ns = nodes_[node.value];
  ns.attempt_pending = false;
  if (ns.transmitting) return;
  const auto idx = select_ready(node);
  if (!idx) {
    if (!ns.queue.empty()) schedule_retry(node);
    return;
  }
  if (medium_busy_until(node) > loop_.now()) {
    try_send(node);
    return;
  }
  Packet packet = std::move(ns.queue[*idx].packet);
  ns.queue.erase(ns.queue.begin() + static_cast<std::ptrdiff_t>(*idx));
  begin_transmission(node, std::move(packet));
}

void Network::begin_transmission(NodeId node, Packet packet) {
  const SimTime now = loop_.now();
  if (hooks_.attach) hooks_.attach(node, packet);
  Transmission tx;
  tx.id = next_tx_id_++;
  tx.sender = node;
  tx.receiver = packet.next_hop();
  tx.start = now;
  tx.end = now + tx_duration(packet);
  tx.hearers = world_.neighbors(node, now);
  for (NodeId h : tx.hearers) nodes_[h.value].rts.record(tx.start, tx.end);
  tx.packet = std::move(packet);
  nodes_[node.value].transmitting = true;
  ++totals_.transmissions;
  const std::uint64_t id = tx.id;
  const SimTime end = tx.end;
  active_.emplace(id, std::move(tx));
  loop_.schedule_at(end, [this, id] { end_transmission(id); });
}

bool Network::heard_cleanly(NodeId hearer, const Transmission& tx) {
  bool overlap = false;
  auto check = [&](const Transmission& other) {
    if (other.id == tx.id) return false;
    if (!(other.start < tx.end && tx.start < other.end)) return false;
    if (other.sender == hearer) return true;  // half duplex: cannot receive while sending
    if (std::find(other.hearers.begin(), other.hearers.end(), hearer) != other.hearers.end()) overlap = true;
    return false;
  };
  for (const auto& [id, other] : active_)
    if (check(other)) return false;
  for (const auto& other : recent_)
    if (check(other)) return false;
  if (!overlap) return true;
  return !channel_rng_.bernoulli(params_.p_col_given_overlap);
}

void Network::end_transmission(std::uint64_t tx_id) {
  auto node = active_.extract(tx_id);
  Transmission& tx = node.mapped();
  const SimTime now = loop_.now();
  while (!recent_.empty() && recent_.front().end < now - 1.0) recent_.pop_front();

  std::vector<NodeId> clean;
  clean.reserve(tx.hearers.size());
  for (NodeId h : tx.hearers)
    if (heard_cleanly(h, tx)) clean.push_back(h);
  const bool delivered = std::find(clean.begin(), clean.end(), tx.receiver) != clean.end();

  if (keep_records_) {
    records_.push_back(TransmissionRecord{tx.sender, tx.receiver, tx.packet.packet_id, tx.start, tx.end,
                                          delivered ? TxOutcome::kDelivered : TxOutcome::kCollided});
  }
  if (trace_) {
    trace_->event(now, "tx", {{"from", tx.sender.value}, {"to", tx.receiver.value}, {"pkt", tx.packet.packet_id},
                              {"rts", {tx.start, tx.end}}, {"outcome", delivered ? "delivered" : "collided"}});
  }

  if (hooks_.on_sent) hooks_.on_sent(tx.sender, tx.receiver, tx.packet);
  for (NodeId h : clean) {
    ++totals_.overhears;
    if (trace_ && h != tx.receiver)
      trace_->event(now, "overhear", {{"node", h.value}, {"from", tx.sender.value}, {"pkt", tx.packet.packet_id}});
    if (hooks_.on_overhear) hooks_.on_overhear(h, tx.sender, tx.receiver, tx.packet);
  }
  const NodeId sender = tx.sender;
  if (delivered) {
    receive(tx.receiver, tx.sender, tx.packet);
  } else {
    ++totals_.collisions;
    settle(tx.packet.packet_id, PacketFate::kCollisionLoss);
  }
  tx.packet.piggyback.reset();
  recent_.push_back(std::move(tx));
  nodes_[sender.value].transmitting = false;
  try_send(sender);
}

void Network::receive(NodeId receiver, NodeId sender, Packet packet) {
  const SimTime now = loop_.now();
  packet.hop_index += 1;
  packet.piggyback.reset();
  if (receiver == packet.dst) {
    const bool intact = packet.content_digest == original_digest(packet.packet_id, packet.flow_id);
    if (trace_) trace_->event(now, "deliver", {{"node", receiver.value}, {"pkt", packet.packet_id}, {"intact", intact}});
    settle(packet.packet_id, intact ? PacketFate::kDelivered : PacketFate::kModified);
    return;
  }
  ++forward_requests_[receiver.value];
  if (hooks_.on_forward_request) hooks_.on_forward_request(receiver, sender, packet);
  switch (forward_packet(receiver, packet)) {
    case ForwardAction::kDrop:
      if (trace_) trace_->event(now, "drop", {{"node", receiver.value}, {"pkt", packet.packet_id}, {"cause", "malicious"}});
      settle(packet.packet_id, PacketFate::kMaliciousDrop);
      return;
    case ForwardAction::kModify:
      if (trace_) trace_->event(now, "modify", {{"node", receiver.value}, {"pkt", packet.packet_id}});
      break;
    case ForwardAction::kForward:
      if (trace_) trace_->event(now, "forward", {{"node", receiver.value}, {"pkt", packet.packet_id}});
      break;
  }
  enqueue(receiver, std::move(packet));
}

}  // namespace coopdetect
