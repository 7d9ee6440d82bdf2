#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>

namespace coopdetect {

/// Simulated time in seconds.
using SimTime = double;

inline constexpr SimTime kNever = std::numeric_limits<double>::infinity();

/// Node identifier in [0, N).
struct NodeId {
  std::uint32_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }

using PacketId = std::uint64_t;
using FlowId = std::uint32_t;

/// 64-bit content digest. Not a security primitive; the auth layer uses its own.
using ContentDigest = std::uint64_t;

}  // namespace coopdetect

template <>
struct std::hash<coopdetect::NodeId> {
  std::size_t operator()(coopdetect::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
