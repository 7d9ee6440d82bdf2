#pragma once

#include <optional>
#include <vector>

#include "coopdetect/mobility.hpp"
#include "coopdetect/rng.hpp"
#include "coopdetect/types.hpp"

namespace coopdetect {

/// Node positions and unit-disk connectivity. Positions are sampled lazily
/// from each node's trajectory; queries must come in nondecreasing time.
class World {
 public:
  World(std::size_t node_count, MobilityParams mobility, double range, std::uint64_t seed);
  /// Fixed positions (static topology); mobility model is forced to static.
  World(std::vector<Position> fixed_positions, double range, double width = 1000.0, double height = 1000.0);

  std::size_t size() const { return states_.size(); }
  double range() const { return range_; }
  const MobilityParams& mobility() const { return mobility_; }

  const std::vector<Position>& positions_at(SimTime now);
  Position position(NodeId node, SimTime now) { return positions_at(now)[node.value]; }

  /// Every other node within Euclidean distance <= range, ascending by id.
  const std::vector<NodeId>& neighbors(NodeId node, SimTime now);
  bool in_range(NodeId a, NodeId b, SimTime now);

  /// Adjacency lists for all nodes at `now`, each ascending by id.
  const std::vector<std::vector<NodeId>>& adjacency(SimTime now);

  /// Replaces a node's position in a static world (test topologies, partitions).
  void move_static(NodeId node, Position where);

  const MobilityState& mobility_state(NodeId node) const { return states_[node.value]; }

 private:
  void refresh(SimTime now);

  MobilityParams mobility_;
  double range_;
  std::vector<MobilityState> states_;
  std::vector<Rng> rngs_;
  std::optional<SimTime> cached_at_;
  std::vector<Position> positions_;
  std::vector<std::vector<NodeId>> adjacency_;
};

}  // namespace coopdetect
