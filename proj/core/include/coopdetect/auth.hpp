#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "coopdetect/codec.hpp"
#include "coopdetect/types.hpp"

namespace coopdetect {

using Digest256 = std::array<std::uint8_t, 32>;
using AuthTag = std::array<std::uint8_t, 32>;
using NodeKey = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kDigestAlgorithm = "blake2b-256";
inline constexpr std::string_view kTagAlgorithm = "hmac-sha256";

Digest256 digest256(std::span<const std::uint8_t> bytes);

/// Per-node secret keys fixed at bootstrap. Stands in for keys exchanged over
/// location-limited side channels before the network starts.
class KeyRegistry {
 public:
  /// Deterministic keys for nodes [0, n).
  static KeyRegistry bootstrap(std::size_t n, std::uint64_t seed);

  bool has(NodeId node) const { return node.value < keys_.size(); }
  /// Throws std::out_of_range for unknown nodes.
  const NodeKey& key(NodeId node) const { return keys_.at(node.value); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::vector<NodeKey> keys_;
};

struct AuthEnvelope {
  NodeId sender;
  Digest256 payload_digest{};
  SimTime timestamp = 0.0;
  std::uint64_t nonce = 0;
  AuthTag tag{};

  friend bool operator==(const AuthEnvelope&, const AuthEnvelope&) = default;
};

void encode(ByteWriter& w, const AuthEnvelope& env);
AuthEnvelope decode_envelope(ByteReader& r);

enum class AuthStatus { kAccept, kTampered, kReplay, kStale, kUnknownSender };
std::string_view to_string(AuthStatus s);

/// Keyed tag over (sender, payload digest, timestamp, nonce).
AuthTag compute_tag(const NodeKey& key, NodeId sender, const Digest256& digest, SimTime timestamp,
                    std::uint64_t nonce);

/// Throws std::out_of_range if `sender` has no registry key.
AuthEnvelope sign(const KeyRegistry& registry, NodeId sender, std::span<const std::uint8_t> payload, SimTime now,
                  std::uint64_t nonce);

/// Integrity and authenticity only: no freshness or replay checks.
AuthStatus authenticate(const KeyRegistry& registry, const AuthEnvelope& env, std::span<const std::uint8_t> payload);

/// One node's verifier: authenticity, freshness and replay rejection.
class ReplayGuard {
 public:
  explicit ReplayGuard(SimTime freshness_window = 10.0) : window_(freshness_window) {}

  /// Records (sender, nonce) on Accept.
  AuthStatus verify(const KeyRegistry& registry, const AuthEnvelope& env, std::span<const std::uint8_t> payload,
                    SimTime now);

  SimTime window() const { return window_; }
  std::size_t tracked() const { return seen_.size(); }

 private:
  void prune(SimTime now);

  SimTime window_;
  SimTime last_prune_ = -kNever;
  // (sender, nonce) -> envelope timestamp
  std::map<std::pair<std::uint32_t, std::uint64_t>, SimTime> seen_;
};

/// Per-sender nonce source; nonces never repeat for a sender.
class NonceCounter {
 public:
  explicit NonceCounter(std::uint64_t start = 1) : next_(start) {}
  std::uint64_t next() { return next_++; }

 private:
  std::uint64_t next_;
};

}  // namespace coopdetect
