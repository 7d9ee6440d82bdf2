#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "coopdetect/auth.hpp"
#include "coopdetect/codec.hpp"
#include "coopdetect/types.hpp"

namespace coopdetect {

// Wire format, version 1 (all integers little-endian, doubles as IEEE-754 bits):
//
//   frame   := version:u8 type:u8 ttl:u8 body_len:u32 body envelope
//   envelope:= sender:u32 digest:32B timestamp:f64 nonce:u64 tag:32B
//
// The envelope authenticates `version type body`; `ttl` is hop-mutable and
// excluded. Bodies per type are listed with each struct below.
inline constexpr std::uint8_t kWireVersion = 1;

enum class MessageType : std::uint8_t {
  kChallenge = 1,
  kAck = 2,
  kVerifyBehavior = 3,
  kBehaviorResponse = 4,
  kCertificateBroadcast = 5,
  kCertificateOffer = 6,
  kGlobalAlarm = 7,
  kVote = 8,
};

std::string_view to_string(MessageType t);

/// round_id:u64 accuser:u32 accused:u32 (Challenge, Ack and VerifyBehavior).
struct RoundRef {
  std::uint64_t round_id = 0;
  NodeId accuser;
  NodeId accused;
  friend bool operator==(const RoundRef&, const RoundRef&) = default;
};

struct Challenge : RoundRef {};
struct Ack : RoundRef {};
struct VerifyBehavior : RoundRef {};

/// round:RoundRef responder:u32 maliciousness:f64 n:u32 neighbors:u32[n]
struct BehaviorResponse {
  RoundRef round;
  NodeId responder;
  double maliciousness = 0.0;
  std::vector<NodeId> neighbors;
  friend bool operator==(const BehaviorResponse&, const BehaviorResponse&) = default;
};

/// A response as the responder signed it.
struct SignedResponse {
  BehaviorResponse response;
  AuthEnvelope auth;
  friend bool operator==(const SignedResponse&, const SignedResponse&) = default;
};

/// round:RoundRef issued_at:f64 group_trust:f64 flood_hops:u32
/// n:u32 (body_len:u32 response_body envelope)[n] m:u32 majority:u32[m]
struct TrustCertificate {
  RoundRef round;  // round.accused assembled and signed the certificate
  SimTime issued_at = 0.0;
  double group_trust = 1.0;
  std::uint32_t flood_hops = 0;
  std::vector<SignedResponse> responses;
  std::vector<NodeId> majority;
  friend bool operator==(const TrustCertificate&, const TrustCertificate&) = default;
};

/// A certificate with its assembler's envelope.
struct SignedCertificate {
  TrustCertificate cert;
  AuthEnvelope auth;
  friend bool operator==(const SignedCertificate&, const SignedCertificate&) = default;
};

/// cert_len:u32 certificate_body envelope
struct CertificateBroadcast {
  SignedCertificate certificate;
  friend bool operator==(const CertificateBroadcast&, const CertificateBroadcast&) = default;
};

/// n:u32 (cert_len:u32 certificate_body envelope)[n]
struct CertificateOffer {
  std::vector<SignedCertificate> certificates;
  friend bool operator==(const CertificateOffer&, const CertificateOffer&) = default;
};

/// subject:u32 origin:u32 issued_at:f64
struct GlobalAlarm {
  NodeId subject;
  NodeId origin;
  SimTime issued_at = 0.0;
  friend bool operator==(const GlobalAlarm&, const GlobalAlarm&) = default;
};

enum class Verdict : std::uint8_t { kAbsolve = 0, kCondemn = 1 };

/// alarm:GlobalAlarm voter:u32 verdict:u8 last_interaction:f64
struct Vote {
  GlobalAlarm alarm;
  NodeId voter;
  Verdict verdict = Verdict::kAbsolve;
  SimTime last_interaction = 0.0;
  friend bool operator==(const Vote&, const Vote&) = default;
};

using MessageBody = std::variant<Challenge, Ack, VerifyBehavior, BehaviorResponse, CertificateBroadcast,
                                 CertificateOffer, GlobalAlarm, Vote>;

MessageType type_of(const MessageBody& body);

/// Bytes the envelope digest covers: version, type, body.
std::vector<std::uint8_t> signed_bytes(const MessageBody& body);
std::vector<std::uint8_t> signed_bytes(const BehaviorResponse& response);
std::vector<std::uint8_t> signed_bytes(const TrustCertificate& cert);

struct Frame {
  MessageBody body;
  std::uint8_t ttl = 0;
  AuthEnvelope auth;
  friend bool operator==(const Frame&, const Frame&) = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Throws DecodeError on malformed input or an unknown version.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Signs `body` as `sender` and frames it.
Frame make_frame(const KeyRegistry& keys, NodeId sender, MessageBody body, SimTime now, std::uint64_t nonce,
                 std::uint8_t ttl = 0);

SignedResponse sign_response(const KeyRegistry& keys, BehaviorResponse response, SimTime now, std::uint64_t nonce);
SignedCertificate sign_certificate(const KeyRegistry& keys, TrustCertificate cert, SimTime now, std::uint64_t nonce);

/// Stable identity of a certificate across copies: (accused, accuser, round id).
struct CertificateId {
  std::uint32_t accused;
  std::uint32_t accuser;
  std::uint64_t round_id;
  friend auto operator<=>(const CertificateId&, const CertificateId&) = default;
};
inline CertificateId certificate_id(const TrustCertificate& c) {
  return {c.round.accused.value, c.round.accuser.value, c.round.round_id};
}

/// Digest of a certificate's full signed encoding, used to compare cached copies.
Digest256 certificate_digest(const SignedCertificate& c);

}  // namespace coopdetect
