#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "coopdetect/auth.hpp"
#include "coopdetect/event_loop.hpp"
#include "coopdetect/messages.hpp"
#include "coopdetect/monitor.hpp"
#include "coopdetect/network.hpp"
#include "coopdetect/topology.hpp"
#include "coopdetect/trace.hpp"
#include "coopdetect/trust.hpp"

namespace coopdetect {

enum class CertificateCheck { kAccept, kTampered, kStale, kRecomputeMismatch, kResponseOmitted };
std::string_view to_string(CertificateCheck c);

/// Checks every signature, the certificate's age, and that recomputing the
/// group trust from the embedded responses reproduces the stated value and
/// majority bit for bit. `own_response` is the receiver's response in this
/// round, if it sent one; it must appear unmodified.
CertificateCheck verify_certificate(const KeyRegistry& keys, const SignedCertificate& cert,
                                    const SignedResponse* own_response, SimTime now, const TrustParams& params,
                                    SimTime response_freshness);

/// Hop diameter of the graph formed by the accused, its responders, and the
/// neighbor lists they reported.
int neighborhood_diameter(NodeId accused, std::span<const SignedResponse> responses);

struct VoteTally {
  std::size_t eligible = 0;
  std::size_t condemn = 0;
  Verdict verdict = Verdict::kAbsolve;  // kAbsolve means surveillance
};

/// Strict majority of eligible votes condemns. Votes from the subject, from
/// voters without an interaction inside the window, and repeat votes are
/// discarded. No eligible votes yields surveillance.
VoteTally whistle_blower_vote(const GlobalAlarm& alarm, std::span<const Vote> votes, const TrustParams& params);

/// How a node runs the protocol.
enum class ProtocolConduct {
  kCooperate,
  kSilent,           // never answers challenges
  kOmitAccusations,  // drops accusing responses from its own certificate
};

struct NodeConduct {
  ProtocolConduct conduct = ProtocolConduct::kCooperate;
  bool false_accuser = false;  // reports maliciousness 1.0 about everyone
};

struct ProtocolContext {
  EventLoop& loop;
  World& world;
  Network& network;
  const KeyRegistry& keys;
  TrustParams params;
  SimTime freshness_window = 10.0;
  TraceSink* trace = nullptr;
};

/// The cooperative detection protocol as run by one node.
class TrustAgent {
 public:
  TrustAgent(NodeId self, ProtocolContext& ctx, Monitor& monitor, NodeConduct conduct = {});

  NodeId self() const { return self_; }

  /// Starts periodic certificate exchange.
  void start();

  /// Monitor trigger: challenge `accused` unless a round is already pending.
  void on_trigger(NodeId accused);
  /// Sends a challenge now. Returns false when the accused is out of range,
  /// blacklisted, or a round is pending.
  bool issue_challenge(NodeId accused);

  void on_control(NodeId from, std::span<const std::uint8_t> bytes);
  void on_piggyback(NodeId from, std::span<const std::uint8_t> bytes);
  /// Encoded certificate to ride on the next data packet, if any.
  std::shared_ptr<const std::vector<std::uint8_t>> piggyback();

  /// Returns false when suppressed (vote already open or subject condemned).
  bool raise_global_alarm(NodeId subject);

  const TrustTable& table() const { return table_; }
  TrustTable& table() { return table_; }
  bool has_certificate(const CertificateId& id) const { return cache_.contains(id); }
  std::set<CertificateId> cached_ids() const;
  std::size_t cache_size() const { return cache_.size(); }
  /// Inserts a certificate as if accepted from the network (tests, partition seeding).
  void seed_certificate(const SignedCertificate& cert);
  bool round_pending(NodeId accused) const { return accuser_rounds_.contains(accused); }

  struct Counters {
    std::uint64_t challenges_sent = 0;
    std::uint64_t certificates_assembled = 0;
    std::uint64_t certificates_accepted = 0;
    std::uint64_t certificates_rejected = 0;
    std::uint64_t rebroadcasts = 0;
    std::uint64_t alarms_raised = 0;
    std::uint64_t votes_cast = 0;
    std::uint64_t silent_timeouts = 0;
    std::uint64_t ignored_messages = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  struct AccuserRound {
    RoundRef round;
    EventHandle timer;
    bool acked = false;
  };
  struct CollectingRound {
    RoundRef round;
    std::vector<SignedResponse> responses;
  };
  struct CachedCertificate {
    SignedCertificate cert;
    Digest256 digest;
  };
  struct OpenVote {
    GlobalAlarm alarm;
    std::map<NodeId, Vote> votes;
  };

  void send(std::optional<NodeId> to, MessageBody body, std::uint8_t ttl = 0);
  void handle_challenge(NodeId from, const Frame& f, std::span<const std::uint8_t> raw);
  void handle_ack(NodeId from, const Frame& f);
  void handle_verify(NodeId from, const Frame& f);
  void handle_response(NodeId from, const Frame& f);
  void handle_certificate(NodeId from, const SignedCertificate& sc, int rebroadcast_ttl);
  void handle_alarm(NodeId from, const Frame& f, std::span<const std::uint8_t> raw);
  void handle_vote(NodeId from, const Frame& f, std::span<const std::uint8_t> raw);
  void assemble(std::uint64_t key);
  void challenge_timeout(NodeId accused, std::uint64_t round_id);
  void apply_certificate(const TrustCertificate& cert);
  void open_vote(const GlobalAlarm& alarm);
  void cast_vote(const GlobalAlarm& alarm);
  void close_vote(NodeId subject);
  void exchange_tick();
  void prune(SimTime now);
  bool verify_fresh(const Frame& f);
  void relay_raw(std::span<const std::uint8_t> raw, std::uint8_t ttl);
  void trace(std::string_view kind, nlohmann::json fields);

  NodeId self_;
  ProtocolContext& ctx_;
  Monitor& monitor_;
  NodeConduct conduct_;
  TrustTable table_;
  ReplayGuard guard_;
  NonceCounter nonces_;
  std::uint64_t next_round_ = 1;
  std::uint64_t next_collect_key_ = 1;

  std::map<NodeId, AccuserRound> accuser_rounds_;
  std::map<NodeId, int> silent_rounds_;
  std::map<std::uint64_t, CollectingRound> collecting_;
  std::map<std::tuple<std::uint64_t, std::uint32_t, std::uint32_t>, SignedResponse> my_responses_;
  std::map<CertificateId, CachedCertificate> cache_;
  std::size_t piggyback_cursor_ = 0;
  std::map<NodeId, OpenVote> open_votes_;
  std::set<std::tuple<std::uint32_t, std::uint32_t, double>> seen_alarms_;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, double>> seen_votes_;
  Counters counters_;
};

}  // namespace coopdetect
