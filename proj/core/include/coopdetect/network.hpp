#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "coopdetect/channel_stats.hpp"
#include "coopdetect/event_loop.hpp"
#include "coopdetect/packet.hpp"
#include "coopdetect/rng.hpp"
#include "coopdetect/routing.hpp"
#include "coopdetect/topology.hpp"
#include "coopdetect/trace.hpp"

namespace coopdetect {

struct NetworkParams {
  std::size_t queue_capacity = 50;
  double link_rate_bps = 2.0e6;
  std::uint32_t header_bytes = 52;
  double p_col_given_overlap = 1.0;
  SimTime control_latency = 0.002;
  SimTime route_retry_interval = 1.0;
  SimTime route_hold_timeout = 30.0;
  SimTime difs = 50e-6;
  SimTime backoff_slot = 20e-6;
  std::uint32_t backoff_slots = 31;
};

/// Callbacks into the per-node detection layers. All are optional.
struct NetworkHooks {
  /// Sender finished putting `packet` on the air toward `receiver`.
  std::function<void(NodeId sender, NodeId receiver, const Packet&)> on_sent;
  /// `hearer` decoded a transmission (the intended receiver included).
  std::function<void(NodeId hearer, NodeId sender, NodeId receiver, const Packet&)> on_overhear;
  /// `receiver` was handed `packet` to forward (before the adversary decides).
  std::function<void(NodeId receiver, NodeId sender, const Packet&)> on_forward_request;
  /// Control message arrived.
  std::function<void(NodeId receiver, NodeId sender, const std::vector<std::uint8_t>&)> on_control;
  /// Called at transmission start; may attach a piggyback payload.
  std::function<void(NodeId sender, Packet&)> attach;
  /// True when `router` refuses to relay through `candidate`.
  std::function<bool(NodeId router, NodeId candidate)> route_excluded;
};

/// Packet-level traffic over the unit-disk world: CBR flows, per-node FIFO
/// queues, CSMA-style channel access with RTS windows, receiver-side
/// collisions, promiscuous overhearing and adversarial relays.
class Network {
 public:
  Network(EventLoop& loop, World& world, NetworkParams params, std::uint64_t seed, NetworkHooks hooks = {},
          TraceSink* trace = nullptr);

  const NetworkParams& params() const { return params_; }

  void add_flow(const Flow& flow);
  void set_adversary(const AdversaryPolicy& policy);
  bool is_adversary(NodeId node) const;
  const std::vector<Flow>& flows() const { return flows_; }

  /// Schedules the first CBR tick of every flow.
  void start();

  /// Originates one packet of `flow` now and hands it to the source queue.
  PacketId originate(const Flow& flow);

  /// Places `packet` into `node`'s queue for transmission. Returns false on
  /// overflow (recorded as a congestion drop).
  bool enqueue(NodeId node, Packet packet);

  /// Decision applied when `node` is asked to forward `packet`.
  enum class ForwardAction { kForward, kDrop, kModify };
  ForwardAction forward_packet(NodeId node, Packet& packet);

  /// One-hop control plane, not subject to MAC contention. A missing
  /// receiver broadcasts to every current neighbor.
  void send_control(NodeId from, std::optional<NodeId> to, std::vector<std::uint8_t> bytes);

  double rts_overlap_fraction(NodeId node, SimTime window, SimTime now) const;
  double local_congestion(NodeId node, SimTime window, SimTime now) const;

  SimTime tx_duration(const Packet& packet) const;

  // Accounting.
  struct Totals {
    std::uint64_t originated = 0;
    std::array<std::uint64_t, kPacketFateCount> by_fate{};
    std::uint64_t transmissions = 0;
    std::uint64_t collisions = 0;
    std::uint64_t overhears = 0;
    std::uint64_t control_messages = 0;
  };
  Totals totals() const;
  PacketFate fate(PacketId id) const;
  /// Data packets this node was handed to relay.
  std::uint64_t forward_requests(NodeId node) const { return forward_requests_.at(node.value); }
  const std::vector<TransmissionRecord>& records() const { return records_; }
  void keep_records(bool keep) { keep_records_ = keep; }
  std::size_t queue_length(NodeId node) const { return nodes_.at(node.value).queue.size(); }

 private:
  struct Queued {
    Packet packet;
    SimTime enqueued_at;
  };
  struct NodeState {
    std::deque<Queued> queue;
    bool transmitting = false;
    bool attempt_pending = false;
    bool retry_pending = false;
    RtsLog rts;
    CongestionLog congestion;
  };
  struct Transmission {
    std::uint64_t id;
    NodeId sender;
    NodeId receiver;
    SimTime start;
    SimTime end;
    std::vector<NodeId> hearers;
    Packet packet;
  };

  void cbr_tick(std::size_t flow_index, std::uint64_t seq);
  void try_send(NodeId node);
  void attempt(NodeId node);
  std::optional<std::size_t> select_ready(NodeId node);
  bool ensure_route(NodeId node, Packet& packet);
  SimTime medium_busy_until(NodeId node) const;
  void begin_transmission(NodeId node, Packet packet);
  void end_transmission(std::uint64_t tx_id);
  bool heard_cleanly(NodeId hearer, const Transmission& tx);
  void receive(NodeId receiver, NodeId sender, Packet packet);
  void settle(PacketId id, PacketFate fate);
  void schedule_retry(NodeId node);

  EventLoop& loop_;
  World& world_;
  NetworkParams params_;
  NetworkHooks hooks_;
  TraceSink* trace_;
  Rng mac_rng_;
  Rng channel_rng_;
  std::vector<Rng> adversary_rng_;

  std::vector<Flow> flows_;
  std::vector<std::optional<AdversaryPolicy>> adversaries_;
  std::vector<NodeState> nodes_;
  std::vector<std::uint64_t> forward_requests_;
  std::unordered_map<std::uint64_t, Transmission> active_;
  std::deque<Transmission> recent_;  // finished, kept briefly for overlap checks
  std::uint64_t next_tx_id_ = 1;
  PacketId next_packet_id_ = 1;
  std::unordered_map<PacketId, PacketFate> fates_;
  Totals totals_;
  bool keep_records_ = false;
  std::vector<TransmissionRecord> records_;
};

}  // namespace coopdetect
