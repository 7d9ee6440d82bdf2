#include "coopdetect/topology.hpp"

#include <stdexcept>

namespace coopdetect {

World::World(std::size_t node_count, MobilityParams mobility, double range, std::uint64_t seed)
    : mobility_(mobility), range_(range) {
  states_.reserve(node_count);
  rngs_.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    rngs_.push_back(Rng::stream(seed, rng_purpose::kMobility, i));
    states_.push_back(initial_mobility(mobility_, rngs_.back()));
  }
}

World::World(std::vector<Position> fixed_positions, double range, double width, double height) : range_(range) {
  mobility_.model = MobilityModel::kStatic;
  mobility_.width = width;
  mobility_.height = height;
  for (const auto& p : fixed_positions) {
    MobilityState s;
    s.current = s.leg_origin = s.waypoint = p;
    s.pause_until = kNever;
    states_.push_back(s);
    rngs_.emplace_back(0);
  }
}

void World::refresh(SimTime now) {
  if (cached_at_ && *cached_at_ == now) return;
  if (cached_at_ && now < *cached_at_) throw std::logic_error("World queried backwards in time");
  const std::size_t n = states_.size();
  positions_.resize(n);
  for (std::size_t i = 0; i < n; ++i) positions_[i] = advance_mobility(states_[i], now, mobility_, rngs_[i]);
  adjacency_.assign(n, {});
  const double r2 = range_ * range_;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = positions_[i].x - positions_[j].x;
      const double dy = positions_[i].y - positions_[j].y;
      if (dx * dx + dy * dy <= r2) {
        adjacency_[i].push_back(NodeId(static_cast<std::uint32_t>(j)));
        adjacency_[j].push_back(NodeId(static_cast<std::uint32_t>(i)));
      }
    }
  }
  // j-loop pushes to adjacency_[j] in increasing i, and to adjacency_[i] in
  // increasing j, so each list is already sorted.
  cached_at_ = now;
}

const std::vector<Position>& World::positions_at(SimTime now) {
  refresh(now);
  return positions_;
}

const std::vector<NodeId>& World::neighbors(NodeId node, SimTime now) {
  refresh(now);
  return adjacency_.at(node.value);
}

bool World::in_range(NodeId a, NodeId b, SimTime now) {
  if (a == b) return false;
  for (NodeId n : neighbors(a, now))
    if (n == b) return true;
  return false;
}

const std::vector<std::vector<NodeId>>& World::adjacency(SimTime now) {
  refresh(now);
  return adjacency_;
}

void World::move_static(NodeId node, Position where) {
  if (mobility_.model != MobilityModel::kStatic) throw std::logic_error("move_static on a mobile world");
  auto& s = states_.at(node.value);
  s.current = s.leg_origin = s.waypoint = where;
  cached_at_.reset();
}

}  // namespace coopdetect
