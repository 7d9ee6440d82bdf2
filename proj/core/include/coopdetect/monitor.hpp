#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "coopdetect/packet.hpp"
#include "coopdetect/rng.hpp"
#include "coopdetect/types.hpp"

namespace coopdetect {

struct MonitorParams {
  double p1 = 1.0;  // watch probability for sent packets
  double p2 = 1.0;  // watch probability for overheard packets
  SimTime forward_timeout = 0.5;
  double suspicion_threshold = 0.6;
  double alpha1_s = 0.2;  // weight of the previous suspicion
  double alpha2_s = 0.8;  // weight of the new evidence
  double lambda_f = 0.5;
  double d_cap = 3.0;  // drop count at which f saturates
  SimTime stats_window = 10.0;
  double p_timeout = 0.02;
};

enum class WatchOrigin { kSent, kOverheard };
enum class Resolution { kConfirmed, kDropSuspected, kModified };

struct WatchEntry {
  PacketId packet_id = 0;
  NodeId watched_forwarder;
  ContentDigest expected_digest = 0;
  SimTime deadline = 0.0;
  WatchOrigin origin = WatchOrigin::kSent;
};

/// What the watcher saw for an entry: the forward with its digest, or nothing
/// by the deadline.
struct ForwardObservation {
  std::optional<ContentDigest> overheard_digest;
};

Resolution resolve_watch(const WatchEntry& entry, const ForwardObservation& obs);

/// Unexplained-loss probability: 1 - (congestion + collision + timeout), clamped to [0, 1].
double p_malicious(double p_congestion, double p_collision, double p_timeout);

/// Evidence growth f(d, Pm) = Pm (e^{lambda d} - 1) / (e^{lambda d_cap} - 1),
/// clamped to [0, 1]. Convex in d; zero for d = 0.
double evidence_growth(double dropped, double p_mal, double lambda, double d_cap);

/// P(n,t) = alpha1 P(n,t-1) + alpha2 f, clamped to [0, 1].
double suspicion_step(double previous, double growth, double alpha1, double alpha2);

struct ChannelEstimates {
  double congestion = 0.0;
  double collision = 0.0;
};

/// Per-neighbor audit record.
struct SuspicionState {
  double p = 0.0;
  double max_p = 0.0;
  bool ever_triggered = false;  // P exceeded the threshold at some window end
  bool challenge_pending = false;
  bool surveillance = false;  // no decay while under surveillance
  // Current window.
  std::uint64_t watched = 0;
  std::uint64_t confirmed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t modified = 0;
  // Whole run.
  std::uint64_t total_watched = 0;
  std::uint64_t total_confirmed = 0;
  std::uint64_t total_dropped = 0;
  std::uint64_t total_modified = 0;
  std::uint64_t peak_window_evidence = 0;  // largest dropped + modified in one window
};

/// Passive watchdog run by one node over its neighbors.
class Monitor {
 public:
  Monitor(NodeId self, MonitorParams params, Rng rng) : self_(self), params_(params), rng_(std::move(rng)) {}

  NodeId self() const { return self_; }
  const MonitorParams& params() const { return params_; }

  /// After sending `packet` to `next_hop`; none when next_hop is the destination.
  std::optional<WatchEntry> watch_sent(const Packet& packet, NodeId next_hop, SimTime now);

  /// After overhearing `transmitter` send `packet` to `next_hop`.
  std::optional<WatchEntry> watch_overheard(const Packet& packet, NodeId transmitter, NodeId next_hop,
                                            bool next_hop_in_range, SimTime now);

  /// `forwarder` was heard transmitting `packet`; resolves a matching entry.
  std::optional<Resolution> observe_forward(NodeId forwarder, const Packet& packet, SimTime now);

  /// Resolves every entry whose deadline passed as drop_suspected.
  std::size_t expire(SimTime now);

  /// Drop-equivalent evidence that did not come from a watch entry.
  void record_misbehavior(NodeId node);

  double estimate_p_malicious(const ChannelEstimates& channel) const;

  /// Applies one window of evidence for `node` and resets its window counters.
  double update_suspicion(NodeId node, double p_mal);

  /// Closes the window: expires entries and updates every tracked neighbor.
  /// Returns the neighbors whose suspicion crossed the trigger threshold.
  std::vector<NodeId> end_window(SimTime now, const ChannelEstimates& channel);

  /// Trigger if P > threshold (strict) and no challenge from this node is pending.
  bool check_trigger(NodeId node) const;

  void set_challenge_pending(NodeId node, bool pending);
  void set_surveillance(NodeId node, bool on);

  /// Latest time this node sent to, received from, or watched `node`.
  void note_interaction(NodeId node, SimTime at);
  std::optional<SimTime> last_interaction(NodeId node) const;

  double suspicion(NodeId node) const;
  const SuspicionState* state(NodeId node) const;
  const std::map<NodeId, SuspicionState>& states() const { return states_; }
  std::size_t pending_entries() const { return entries_.size(); }

 private:
  void apply(NodeId forwarder, Resolution r);

  NodeId self_;
  MonitorParams params_;
  Rng rng_;
  std::map<std::pair<PacketId, NodeId>, WatchEntry> entries_;
  std::map<NodeId, SuspicionState> states_;
  std::map<NodeId, SimTime> interactions_;
};

}  // namespace coopdetect
