#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coopdetect/mobility.hpp"
#include "coopdetect/monitor.hpp"
#include "coopdetect/network.hpp"
#include "coopdetect/protocol.hpp"
#include "coopdetect/trust.hpp"

namespace coopdetect {

enum class DetectorVariant { kProposed, kNaiveWatchdog, kIndividualObservation };

std::string_view to_string(DetectorVariant v);
/// Throws std::invalid_argument for unknown names.
DetectorVariant parse_variant(std::string_view name);
std::vector<DetectorVariant> all_variants();

struct WorldConfig {
  double width = 1000.0;
  double height = 1000.0;
  SimTime duration = 1000.0;
  std::uint32_t nodes = 50;
  double range = 50.0;
};

struct MobilityConfig {
  MobilityModel model = MobilityModel::kRandomWaypoint;
  double min_speed = 0.1;
  double max_speed = 8.0;
  SimTime pause = 5.0;
};

struct TrafficConfig {
  std::uint32_t flows = 9;
  double rate = 1.0;  // packets per second per flow
  std::uint32_t payload = 512;
};

struct AdversaryConfig {
  std::uint32_t count = 5;
  // Each adversary's drop probability is drawn uniformly from [min, max].
  double drop_probability_min = 1.0;
  double drop_probability_max = 1.0;
  double modify_probability = 0.0;
  ProtocolConduct conduct = ProtocolConduct::kCooperate;
  std::uint32_t false_accusers = 0;  // honest-forwarding nodes that lie in the protocol
};

/// Optional hand-placed layout. Any present list overrides the random choice.
struct ExplicitLayout {
  std::vector<Position> positions;  // implies static nodes
  std::vector<std::pair<std::uint32_t, std::uint32_t>> flows;
  std::vector<std::uint32_t> adversaries;
  std::vector<std::uint32_t> false_accusers;
  bool empty() const { return positions.empty() && flows.empty() && adversaries.empty() && false_accusers.empty(); }
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  DetectorVariant variant = DetectorVariant::kProposed;
  WorldConfig world;
  MobilityConfig mobility;
  TrafficConfig traffic;
  AdversaryConfig adversaries;
  NetworkParams network;
  MonitorParams monitor;
  TrustParams trust;
  SimTime freshness_window = 10.0;
  ExplicitLayout layout;

  /// One message per violated constraint; empty when valid.
  std::vector<std::string> validate() const;
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, std::vector<std::string> problems)
      : std::runtime_error(what), problems(std::move(problems)) {}
  std::vector<std::string> problems;
};

/// Fifty nodes on 1000 m x 1000 m for 1000 s, 50 m range, random waypoint at
/// up to 8 m/s with 5 s pauses, nine 1 packet/s CBR flows of 512 B, five droppers.
ScenarioConfig table1_preset();

/// Parses the key/value tree. Missing keys keep preset values. Unknown keys,
/// type errors and failed validation throw ConfigError listing every problem.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::string& path);

/// Canonical form: fixed key order, two-space indent, shortest round-trip numbers.
std::string serialize_config(const ScenarioConfig& config);

}  // namespace coopdetect
