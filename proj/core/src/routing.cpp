#include "coopdetect/routing.hpp"

#include <deque>
#include <limits>

namespace coopdetect {

std::optional<Route> compute_route(const std::vector<std::vector<NodeId>>& adjacency, NodeId src, NodeId dst,
                                   const std::function<bool(NodeId)>& excluded) {
  if (src == dst) return Route{src};
  const std::size_t n = adjacency.size();
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  auto blocked = [&](NodeId v) { return v != src && v != dst && excluded && excluded(v); };

  // Distances to dst, then a greedy walk from src picking the smallest id
  // that stays on a shortest path.
  std::vector<std::size_t> dist(n, kUnreached);
  std::deque<NodeId> frontier{dst};
  dist[dst.value] = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    if (u == src) break;
    if (blocked(u)) continue;
    for (NodeId v : adjacency[u.value]) {
      if (dist[v.value] != kUnreached) continue;
      dist[v.value] = dist[u.value] + 1;
      frontier.push_back(v);
    }
  }
  if (dist[src.value] == kUnreached) return std::nullopt;

  Route route{src};
  NodeId at = src;
  while (at != dst) {
    for (NodeId v : adjacency[at.value]) {
      if (dist[v.value] == dist[at.value] - 1 && !blocked(v)) {
        at = v;
        break;
      }
    }
    route.push_back(at);
  }
  return route;
}

}  // namespace coopdetect
