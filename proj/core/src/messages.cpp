#include "coopdetect/messages.hpp"

namespace coopdetect {

namespace {

void put(ByteWriter& w, const RoundRef& r) {
  w.u64(r.round_id);
  w.node(r.accuser);
  w.node(r.accused);
}

RoundRef get_round(ByteReader& r) {
  RoundRef ref;
  ref.round_id = r.u64();
  ref.accuser = r.node();
  ref.accused = r.node();
  return ref;
}

void put(ByteWriter& w, const BehaviorResponse& b) {
  put(w, b.round);
  w.node(b.responder);
  w.f64(b.maliciousness);
  w.u32(static_cast<std::uint32_t>(b.neighbors.size()));
  for (NodeId n : b.neighbors) w.node(n);
}

BehaviorResponse get_response(ByteReader& r) {
  BehaviorResponse b;
  b.round = get_round(r);
  b.responder = r.node();
  b.maliciousness = r.f64();
  const std::uint32_t n = r.count(4);
  b.neighbors.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) b.neighbors.push_back(r.node());
  return b;
}

void put(ByteWriter& w, const TrustCertificate& c) {
  put(w, c.round);
  w.f64(c.issued_at);
  w.f64(c.group_trust);
  w.u32(c.flood_hops);
  w.u32(static_cast<std::uint32_t>(c.responses.size()));
  for (const auto& sr : c.responses) {
    ByteWriter body;
    put(body, sr.response);
    w.blob(body.data());
    encode(w, sr.auth);
  }
  w.u32(static_cast<std::uint32_t>(c.majority.size()));
  for (NodeId n : c.majority) w.node(n);
}

TrustCertificate get_certificate(ByteReader& r) {
  TrustCertificate c;
  c.round = get_round(r);
  c.issued_at = r.f64();
  c.group_trust = r.f64();
  c.flood_hops = r.u32();
  const std::uint32_t n = r.count(4);
  c.responses.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto body = r.blob();
    ByteReader br(body);
    SignedResponse sr;
    sr.response = get_response(br);
    br.expect_end();
    sr.auth = decode_envelope(r);
    c.responses.push_back(std::move(sr));
  }
  const std::uint32_t m = r.count(4);
  c.majority.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) c.majority.push_back(r.node());
  return c;
}

void put(ByteWriter& w, const SignedCertificate& sc) {
  ByteWriter body;
  put(body, sc.cert);
  w.blob(body.data());
  encode(w, sc.auth);
}

SignedCertificate get_signed_certificate(ByteReader& r) {
  const auto body = r.blob();
  ByteReader br(body);
  SignedCertificate sc;
  sc.cert = get_certificate(br);
  br.expect_end();
  sc.auth = decode_envelope(r);
  return sc;
}

void put(ByteWriter& w, const GlobalAlarm& a) {
  w.node(a.subject);
  w.node(a.origin);
  w.f64(a.issued_at);
}

GlobalAlarm get_alarm(ByteReader& r) {
  GlobalAlarm a;
  a.subject = r.node();
  a.origin = r.node();
  a.issued_at = r.f64();
  return a;
}

void put_body(ByteWriter& w, const MessageBody& body) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Challenge> || std::is_same_v<T, Ack> || std::is_same_v<T, VerifyBehavior>) {
          put(w, static_cast<const RoundRef&>(m));
        } else if constexpr (std::is_same_v<T, BehaviorResponse>) {
          put(w, m);
        } else if constexpr (std::is_same_v<T, CertificateBroadcast>) {
          put(w, m.certificate);
        } else if constexpr (std::is_same_v<T, CertificateOffer>) {
          w.u32(static_cast<std::uint32_t>(m.certificates.size()));
          for (const auto& c : m.certificates) put(w, c);
        } else if constexpr (std::is_same_v<T, GlobalAlarm>) {
          put(w, m);
        } else if constexpr (std::is_same_v<T, Vote>) {
          put(w, m.alarm);
          w.node(m.voter);
          w.u8(static_cast<std::uint8_t>(m.verdict));
          w.f64(m.last_interaction);
        }
      },
      body);
}

MessageBody get_body(MessageType type, ByteReader& r) {
  switch (type) {
    case MessageType::kChallenge: return Challenge{get_round(r)};
    case MessageType::kAck: return Ack{get_round(r)};
    case MessageType::kVerifyBehavior: return VerifyBehavior{get_round(r)};
    case MessageType::kBehaviorResponse: return get_response(r);
    case MessageType::kCertificateBroadcast: return CertificateBroadcast{get_signed_certificate(r)};
    case MessageType::kCertificateOffer: {
      CertificateOffer offer;
      const std::uint32_t n = r.count(4);
      for (std::uint32_t i = 0; i < n; ++i) offer.certificates.push_back(get_signed_certificate(r));
      return offer;
    }
    case MessageType::kGlobalAlarm: return get_alarm(r);
    case MessageType::kVote: {
      Vote v;
      v.alarm = get_alarm(r);
      v.voter = r.node();
      const std::uint8_t verdict = r.u8();
      if (verdict > 1) throw DecodeError("bad verdict");
      v.verdict = static_cast<Verdict>(verdict);
      v.last_interaction = r.f64();
      return v;
    }
  }
  throw DecodeError("unknown message type");
}

std::vector<std::uint8_t> with_header(MessageType type, const std::vector<std::uint8_t>& body) {
  ByteWriter w;
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type));
  w.bytes(body);
  return std::move(w).take();
}

}  // namespace

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::kChallenge: return "challenge";
    case MessageType::kAck: return "ack";
    case MessageType::kVerifyBehavior: return "verify_behavior";
    case MessageType::kBehaviorResponse: return "behavior_response";
    case MessageType::kCertificateBroadcast: return "certificate_broadcast";
    case MessageType::kCertificateOffer: return "certificate_offer";
    case MessageType::kGlobalAlarm: return "global_alarm";
    case MessageType::kVote: return "vote";
  }
  return "?";
}

MessageType type_of(const MessageBody& body) {
  return static_cast<MessageType>(body.index() + 1);
}

std::vector<std::uint8_t> signed_bytes(const MessageBody& body) {
  ByteWriter w;
  put_body(w, body);
  return with_header(type_of(body), w.data());
}

std::vector<std::uint8_t> signed_bytes(const BehaviorResponse& response) { return signed_bytes(MessageBody{response}); }

std::vector<std::uint8_t> signed_bytes(const TrustCertificate& cert) {
  ByteWriter w;
  put(w, cert);
  return with_header(MessageType::kCertificateBroadcast, w.data());
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  ByteWriter body;
  put_body(body, frame.body);
  ByteWriter w;
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type_of(frame.body)));
  w.u8(frame.ttl);
  w.blob(body.data());
  encode(w, frame.auth);
  return std::move(w).take();
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint8_t version = r.u8();
  if (version != kWireVersion) throw DecodeError("unsupported wire version");
  const std::uint8_t type = r.u8();
  if (type < 1 || type > 8) throw DecodeError("unknown message type");
  Frame f;
  f.ttl = r.u8();
  const auto body = r.blob();
  ByteReader br(body);
  f.body = get_body(static_cast<MessageType>(type), br);
  br.expect_end();
  f.auth = decode_envelope(r);
  r.expect_end();
  return f;
}

Frame make_frame(const KeyRegistry& keys, NodeId sender, MessageBody body, SimTime now, std::uint64_t nonce,
                 std::uint8_t ttl) {
  Frame f;
  f.auth = sign(keys, sender, signed_bytes(body), now, nonce);
  f.body = std::move(body);
  f.ttl = ttl;
  return f;
}

SignedResponse sign_response(const KeyRegistry& keys, BehaviorResponse response, SimTime now, std::uint64_t nonce) {
  SignedResponse sr;
  sr.auth = sign(keys, response.responder, signed_bytes(response), now, nonce);
  sr.response = std::move(response);
  return sr;
}

SignedCertificate sign_certificate(const KeyRegistry& keys, TrustCertificate cert, SimTime now, std::uint64_t nonce) {
  SignedCertificate sc;
  sc.auth = sign(keys, cert.round.accused, signed_bytes(cert), now, nonce);
  sc.cert = std::move(cert);
  return sc;
}

Digest256 certificate_digest(const SignedCertificate& c) {
  ByteWriter w;
  put(w, c);
  return digest256(w.data());
}

}  // namespace coopdetect
