#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "coopdetect/types.hpp"

namespace coopdetect {

struct Packet {
  PacketId packet_id = 0;
  FlowId flow_id = 0;
  NodeId src;
  NodeId dst;
  std::vector<NodeId> route;  // src ... dst
  std::size_t hop_index = 0;  // position of the current holder in `route`
  std::uint32_t payload_bytes = 512;
  ContentDigest content_digest = 0;
  SimTime created_at = 0.0;
  /// Encoded protocol message riding on this transmission, if any.
  std::shared_ptr<const std::vector<std::uint8_t>> piggyback;

  NodeId holder() const { return route.at(hop_index); }
  bool has_next_hop() const { return hop_index + 1 < route.size(); }
  NodeId next_hop() const { return route.at(hop_index + 1); }
};

/// Digest of the original content of a packet.
ContentDigest original_digest(PacketId id, FlowId flow);

struct Flow {
  FlowId flow_id = 0;
  NodeId src;
  NodeId dst;
  double rate = 1.0;  // packets per second
  SimTime start = 0.0;
  SimTime stop = 0.0;
  std::uint32_t payload_bytes = 512;
};

struct AdversaryPolicy {
  NodeId node;
  double drop_probability = 1.0;
  double modify_probability = 0.0;
};

enum class TxOutcome { kDelivered, kCollided, kQueuedDrop };

struct TransmissionRecord {
  NodeId sender;
  NodeId receiver;
  PacketId packet_id = 0;
  SimTime rts_start = 0.0;
  SimTime rts_end = 0.0;
  TxOutcome outcome = TxOutcome::kDelivered;
};

/// Terminal state of an originated packet.
enum class PacketFate : std::uint8_t {
  kInFlight,
  kDelivered,
  kMaliciousDrop,
  kCongestionDrop,
  kCollisionLoss,
  kModified,      // reached dst with an altered digest
  kRouteExpired,  // held without a route past the hold timeout
};

inline constexpr std::size_t kPacketFateCount = 7;

std::string_view to_string(PacketFate fate);
std::string_view to_string(TxOutcome outcome);

}  // namespace coopdetect
