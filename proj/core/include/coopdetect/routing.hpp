#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coopdetect/types.hpp"

namespace coopdetect {

using Route = std::vector<NodeId>;

/// Hop-count shortest path over `adjacency` (lists sorted ascending). Among
/// equal-length paths the one with the smallest next hop at every step wins.
/// `excluded` nodes are never used as relays (src and dst are exempt).
/// Returns nullopt when dst is unreachable.
std::optional<Route> compute_route(const std::vector<std::vector<NodeId>>& adjacency, NodeId src, NodeId dst,
                                   const std::function<bool(NodeId)>& excluded = {});

}  // namespace coopdetect
