#pragma once

#include <memory>
#include <vector>

#include "coopdetect/auth.hpp"
#include "coopdetect/event_loop.hpp"
#include "coopdetect/messages.hpp"
#include "coopdetect/monitor.hpp"
#include "coopdetect/network.hpp"
#include "coopdetect/protocol.hpp"
#include "coopdetect/rng.hpp"
#include "coopdetect/topology.hpp"
#include "coopdetect/trust.hpp"

namespace testing {

using namespace coopdetect;

/// Seeded draws for property tests.
struct Gen {
  Rng rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double unit() { return rng.uniform01(); }
  double between(double lo, double hi) { return rng.uniform(lo, hi); }
  std::uint64_t below(std::uint64_t n) { return rng.below(n); }
  /// Multiple of `step` in [0, 1].
  double grid(double step) { return static_cast<double>(rng.below(static_cast<std::uint64_t>(1.0 / step + 0.5) + 1)) * step; }
};

/// Static world with one monitor and one trust agent per node, wired
/// through the control plane only.
struct ProtocolBed {
  EventLoop loop;
  World world;
  KeyRegistry keys;
  std::unique_ptr<Network> network;
  std::unique_ptr<ProtocolContext> ctx;
  std::vector<Monitor> monitors;
  std::vector<std::unique_ptr<TrustAgent>> agents;

  ProtocolBed(std::vector<Position> positions, double range, TrustParams params = {},
              std::vector<NodeConduct> conduct = {}, SimTime end = 2000.0)
      : loop(end), world(std::move(positions), range), keys(KeyRegistry::bootstrap(world.size(), 7)) {
    const std::size_t n = world.size();
    NetworkHooks hooks;
    hooks.on_control = [this](NodeId r, NodeId from, const std::vector<std::uint8_t>& bytes) {
      agents[r.value]->on_control(from, bytes);
    };
    network = std::make_unique<Network>(loop, world, NetworkParams{}, 7, hooks);
    ctx = std::make_unique<ProtocolContext>(ProtocolContext{loop, world, *network, keys, params, 10.0, nullptr});
    monitors.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) monitors.emplace_back(NodeId{i}, MonitorParams{}, Rng(i));
    for (std::uint32_t i = 0; i < n; ++i)
      agents.push_back(std::make_unique<TrustAgent>(NodeId{i}, *ctx, monitors[i],
                                                    i < conduct.size() ? conduct[i] : NodeConduct{}));
  }

  TrustAgent& agent(std::uint32_t i) { return *agents[i]; }
  Monitor& monitor(std::uint32_t i) { return monitors[i]; }

  /// Gives `watcher` first-hand history of `subject` forwarding `count`
  /// packets faithfully, leaving its suspicion at zero.
  void clean_history(std::uint32_t watcher, std::uint32_t subject, int count = 3) {
    static PacketId next = 1'000'000;
    for (int i = 0; i < count; ++i) {
      Packet p;
      p.packet_id = next++;
      p.src = NodeId{watcher};
      p.dst = NodeId{1'000'000};
      p.route = {NodeId{watcher}, NodeId{subject}, p.dst};
      p.content_digest = original_digest(p.packet_id, 0);
      monitors[watcher].watch_sent(p, NodeId{subject}, loop.now());
      p.hop_index = 1;
      monitors[watcher].observe_forward(NodeId{subject}, p, loop.now());
    }
  }

  /// Advances the clock by `dt` seconds, firing every event on the way.
  void run_for(SimTime dt) {
    const SimTime until = loop.now() + dt;
    loop.schedule_at(until, [] {});
    while (loop.now() < until && loop.step()) {
    }
  }
};

/// A validly signed certificate for `accused` over the given reports.
inline SignedCertificate make_certificate(const KeyRegistry& keys, NodeId accused, NodeId accuser,
                                          std::uint64_t round_id, const std::vector<std::pair<NodeId, double>>& reports,
                                          SimTime now, double trust_threshold = 0.5, std::uint64_t nonce_base = 1) {
  TrustCertificate c;
  c.round = RoundRef{round_id, accuser, accused};
  c.issued_at = now;
  c.flood_hops = 2;
  std::vector<Observation> obs;
  std::uint64_t nonce = nonce_base;
  std::vector<std::pair<NodeId, double>> sorted = reports;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [responder, m] : sorted) {
    BehaviorResponse r;
    r.round = c.round;
    r.responder = responder;
    r.maliciousness = m;
    c.responses.push_back(sign_response(keys, r, now, nonce++));
    obs.push_back({responder, m});
  }
  const auto g = compute_group_trust(obs, trust_threshold);
  c.group_trust = g->t_certificate;
  c.majority = g->majority;
  return sign_certificate(keys, c, now, nonce);
}

}  // namespace testing
