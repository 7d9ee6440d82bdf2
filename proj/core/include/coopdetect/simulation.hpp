#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "coopdetect/auth.hpp"
#include "coopdetect/event_loop.hpp"
#include "coopdetect/monitor.hpp"
#include "coopdetect/network.hpp"
#include "coopdetect/protocol.hpp"
#include "coopdetect/scenario.hpp"
#include "coopdetect/topology.hpp"
#include "coopdetect/trace.hpp"

namespace coopdetect {

struct NodeReport {
  NodeId node;
  bool malicious = false;
  double drop_probability = 0.0;
  bool false_accuser = false;
  bool on_path = false;  // handed at least one data packet to relay
  std::uint64_t forward_requests = 0;
  std::uint64_t watched_forwards = 0;  // relay requests covered by at least one watch entry
  bool flagged = false;
  std::uint32_t complaints = 0;  // distinct other nodes holding it suspected or malicious
  double max_suspicion = 0.0;    // highest P any neighbor held
};

struct RunMetrics {
  std::uint64_t seed = 0;
  DetectorVariant variant = DetectorVariant::kProposed;
  // Both rates count only on-path nodes. No malicious node on path makes
  // the detection rate 1; no honest node on path makes the false-alarm rate 0.
  double false_alarm_rate = 0.0;
  double detection_rate = 1.0;
  std::uint32_t honest_on_path = 0;
  std::uint32_t malicious_on_path = 0;
  std::uint32_t honest_flagged = 0;     // on-path only
  std::uint32_t malicious_flagged = 0;  // on-path only
  std::uint64_t originated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t malicious_drops = 0;
  std::uint64_t congestion_drops = 0;
  std::uint64_t collision_losses = 0;
  std::uint64_t modified = 0;
  std::uint64_t route_expired = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t control_messages = 0;
  std::uint64_t challenges = 0;
  std::uint64_t certificates = 0;
  std::uint64_t alarms = 0;
  std::vector<NodeReport> nodes;
};

/// One scenario instance: world, network, per-node monitors and, for the
/// proposed variant, per-node protocol agents.
class Simulation {
 public:
  /// Throws ConfigError when the config does not validate.
  explicit Simulation(ScenarioConfig config, TraceSink* trace = nullptr);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs to the configured duration and returns the end-of-run metrics.
  RunMetrics run();
  /// Metrics for the state reached so far.
  RunMetrics metrics() const;

  const ScenarioConfig& config() const { return config_; }
  EventLoop& loop() { return loop_; }
  World& world() { return *world_; }
  Network& network() { return *network_; }
  const KeyRegistry& keys() const { return keys_; }
  Monitor& monitor(NodeId n) { return monitors_.at(n.value); }
  const Monitor& monitor(NodeId n) const { return monitors_.at(n.value); }
  /// Null unless the variant is proposed.
  TrustAgent* agent(NodeId n) { return agents_.empty() ? nullptr : agents_.at(n.value).get(); }
  const TrustAgent* agent(NodeId n) const { return agents_.empty() ? nullptr : agents_.at(n.value).get(); }
  std::size_t size() const { return monitors_.size(); }
  bool is_malicious(NodeId n) const { return drop_probability_.at(n.value) >= 0.0; }
  bool is_false_accuser(NodeId n) const { return false_accuser_.at(n.value); }

  /// Complaint rule of the configured variant: does `observer` hold `subject` suspected?
  bool complains(NodeId observer, NodeId subject) const;
  /// Flag rule of the configured variant.
  bool flagged(NodeId subject) const;

 private:
  void assign_roles();
  NetworkHooks make_hooks();
  void window_tick(SimTime at);
  void note_watch(PacketId id, NodeId forwarder);

  ScenarioConfig config_;
  TraceSink* trace_;
  EventLoop loop_;
  std::unique_ptr<World> world_;
  KeyRegistry keys_;
  std::vector<Monitor> monitors_;
  std::vector<double> drop_probability_;  // negative for honest nodes
  std::vector<bool> false_accuser_;
  std::vector<std::pair<NodeId, NodeId>> flows_;
  std::unique_ptr<Network> network_;
  std::unique_ptr<ProtocolContext> ctx_;
  std::vector<std::unique_ptr<TrustAgent>> agents_;
  std::set<std::pair<PacketId, NodeId>> watched_;
  std::vector<std::uint64_t> watched_forwards_;
  bool ran_ = false;
};

}  // namespace coopdetect
