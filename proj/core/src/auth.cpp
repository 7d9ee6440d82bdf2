#include "coopdetect/auth.hpp"

#include <sodium.h>

#include <stdexcept>

namespace coopdetect {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static const SodiumInit init; }

}  // namespace

Digest256 digest256(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  Digest256 out{};
  crypto_generichash(out.data(), out.size(), bytes.data(), bytes.size(), nullptr, 0);
  return out;
}

KeyRegistry KeyRegistry::bootstrap(std::size_t n, std::uint64_t seed) {
  KeyRegistry reg;
  reg.keys_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ByteWriter w;
    w.u64(seed);
    w.u64(i);
    reg.keys_.push_back(digest256(w.data()));
  }
  return reg;
}

void encode(ByteWriter& w, const AuthEnvelope& env) {
  w.node(env.sender);
  w.fixed(env.payload_digest);
  w.f64(env.timestamp);
  w.u64(env.nonce);
  w.fixed(env.tag);
}

AuthEnvelope decode_envelope(ByteReader& r) {
  AuthEnvelope env;
  env.sender = r.node();
  env.payload_digest = r.fixed<32>();
  env.timestamp = r.f64();
  env.nonce = r.u64();
  env.tag = r.fixed<32>();
  return env;
}

std::string_view to_string(AuthStatus s) {
  switch (s) {
    case AuthStatus::kAccept: return "accept";
    case AuthStatus::kTampered: return "tampered";
    case AuthStatus::kReplay: return "replay";
    case AuthStatus::kStale: return "stale";
    case AuthStatus::kUnknownSender: return "unknown_sender";
  }
  return "?";
}

AuthTag compute_tag(const NodeKey& key, NodeId sender, const Digest256& digest, SimTime timestamp,
                    std::uint64_t nonce) {
  ensure_sodium();
  ByteWriter w;
  w.node(sender);
  w.fixed(digest);
  w.f64(timestamp);
  w.u64(nonce);
  AuthTag tag{};
  crypto_auth_hmacsha256(tag.data(), w.data().data(), w.data().size(), key.data());
  return tag;
}

AuthEnvelope sign(const KeyRegistry& registry, NodeId sender, std::span<const std::uint8_t> payload, SimTime now,
                  std::uint64_t nonce) {
  const NodeKey& key = registry.key(sender);
  AuthEnvelope env;
  env.sender = sender;
  env.payload_digest = digest256(payload);
  env.timestamp = now;
  env.nonce = nonce;
  env.tag = compute_tag(key, sender, env.payload_digest, now, nonce);
  return env;
}

AuthStatus authenticate(const KeyRegistry& registry, const AuthEnvelope& env, std::span<const std::uint8_t> payload) {
  if (!registry.has(env.sender)) return AuthStatus::kUnknownSender;
  if (digest256(payload) != env.payload_digest) return AuthStatus::kTampered;
  const AuthTag expect = compute_tag(registry.key(env.sender), env.sender, env.payload_digest, env.timestamp, env.nonce);
  if (sodium_memcmp(expect.data(), env.tag.data(), expect.size()) != 0) return AuthStatus::kTampered;
  return AuthStatus::kAccept;
}

AuthStatus ReplayGuard::verify(const KeyRegistry& registry, const AuthEnvelope& env,
                               std::span<const std::uint8_t> payload, SimTime now) {
  const AuthStatus auth = authenticate(registry, env, payload);
  if (auth != AuthStatus::kAccept) return auth;
  if (now - env.timestamp > window_ || env.timestamp > now) return AuthStatus::kStale;
  prune(now);
  const auto key = std::make_pair(env.sender.value, env.nonce);
  if (seen_.contains(key)) return AuthStatus::kReplay;
  seen_.emplace(key, env.timestamp);
  return AuthStatus::kAccept;
}

void ReplayGuard::prune(SimTime now) {
  // Anything older than the window would be rejected as stale anyway.
  if (now - last_prune_ < 1.0) return;
  last_prune_ = now;
  for (auto it = seen_.begin(); it != seen_.end();) {
    if (now - it->second > window_)
      it = seen_.erase(it);
    else
      ++it;
  }
}

}  // namespace coopdetect
