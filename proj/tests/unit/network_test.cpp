#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "coopdetect/channel_stats.hpp"
#include "coopdetect/network.hpp"
#include "coopdetect/routing.hpp"
#include "support.hpp"

using namespace coopdetect;

namespace {

struct Line {
  EventLoop loop;
  World world;
  Network net;
  explicit Line(int nodes, SimTime end, NetworkHooks hooks = {})
      : loop(end), world(positions(nodes), 50.0), net(loop, world, NetworkParams{}, 3, std::move(hooks)) {}
  static std::vector<Position> positions(int n) {
    std::vector<Position> p;
    for (int i = 0; i < n; ++i) p.push_back({10.0 + 40.0 * i, 10.0});
    return p;
  }
};

Flow flow(std::uint32_t s, std::uint32_t d, double rate, SimTime stop, FlowId id = 0) {
  Flow f;
  f.flow_id = id;
  f.src = NodeId{s};
  f.dst = NodeId{d};
  f.rate = rate;
  f.stop = stop;
  return f;
}

std::uint64_t fate_count(const Network::Totals& t, PacketFate f) { return t.by_fate[static_cast<std::size_t>(f)]; }

// Every shortest path by exhaustive search, then the lexicographically smallest.
std::optional<Route> brute_route(const std::vector<std::vector<NodeId>>& adj, NodeId src, NodeId dst,
                                 const std::function<bool(NodeId)>& excluded) {
  std::optional<Route> best;
  Route path{src};
  std::vector<bool> used(adj.size(), false);
  used[src.value] = true;
  std::function<void()> dfs = [&] {
    const NodeId u = path.back();
    if (u == dst) {
      if (!best || path.size() < best->size() || (path.size() == best->size() && path < *best)) best = path;
      return;
    }
    if (best && path.size() >= best->size()) return;
    for (NodeId v : adj[u.value]) {
      if (used[v.value]) continue;
      if (v != dst && excluded && excluded(v)) continue;
      used[v.value] = true;
      path.push_back(v);
      dfs();
      path.pop_back();
      used[v.value] = false;
    }
  };
  dfs();
  return best;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("constant bit rate emits exactly floor(rate * duration) + 1 packets") {
    for (double rate : {1.0, 2.0, 0.5, 3.0}) {
      Line l(2, 100.0);
      l.net.add_flow(flow(0, 1, rate, 40.0));
      l.net.start();
      l.loop.run();
      CHECK(l.net.totals().originated == static_cast<std::uint64_t>(std::floor(rate * 40.0)) + 1);
    }
  }

  TEST_CASE("honest relays deliver every packet on an uncongested line") {
    Line l(5, 200.0);
    l.net.add_flow(flow(0, 4, 1.0, 100.0));
    l.net.start();
    l.loop.run();
    const auto t = l.net.totals();
    CHECK(t.originated == 101);
    CHECK(fate_count(t, PacketFate::kDelivered) == 101);
    CHECK(l.net.forward_requests(NodeId{2}) == 101);
    CHECK(l.net.forward_requests(NodeId{0}) == 0);
  }

  TEST_CASE("a certain dropper on the only path drops everything it relays") {
    Line l(4, 200.0);
    l.net.add_flow(flow(0, 3, 1.0, 50.0));
    l.net.set_adversary({NodeId{1}, 1.0, 0.0});
    l.net.start();
    l.loop.run();
    const auto t = l.net.totals();
    CHECK(fate_count(t, PacketFate::kMaliciousDrop) == t.originated);
    CHECK(fate_count(t, PacketFate::kDelivered) == 0);
  }

  TEST_CASE("a modifier's packets arrive flagged as modified") {
    Line l(3, 200.0);
    l.net.add_flow(flow(0, 2, 1.0, 50.0));
    l.net.set_adversary({NodeId{1}, 0.0, 1.0});
    l.net.start();
    l.loop.run();
    const auto t = l.net.totals();
    CHECK(fate_count(t, PacketFate::kModified) == t.originated);
  }

  TEST_CASE("a source never drops its own packets even when it is an adversary") {
    Line l(3, 200.0);
    l.net.add_flow(flow(0, 2, 1.0, 20.0));
    l.net.set_adversary({NodeId{0}, 1.0, 0.0});
    l.net.start();
    l.loop.run();
    CHECK(fate_count(l.net.totals(), PacketFate::kDelivered) == 21);
  }

  TEST_CASE("fates are conserved: every originated packet has exactly one fate") {
    MobilityParams mp;
    EventLoop loop(300.0);
    World world(30, mp, 120.0, 21);
    Network net(loop, world, NetworkParams{}, 21);
    for (std::uint32_t f = 0; f < 8; ++f) net.add_flow(flow(f, 29 - f, 4.0, 300.0, f));
    net.set_adversary({NodeId{12}, 0.6, 0.2});
    net.start();
    loop.run();
    const auto t = net.totals();
    std::uint64_t sum = 0;
    for (auto v : t.by_fate) sum += v;
    CHECK(sum == t.originated);
    CHECK(t.originated == 8 * 1201);
    CHECK(fate_count(t, PacketFate::kDelivered) > 0);
  }

  TEST_CASE("overflowing a queue is recorded as congestion") {
    Line l(2, 5.0);
    Packet base;
    base.src = NodeId{0};
    base.dst = NodeId{1};
    base.route = {NodeId{0}};
    std::size_t accepted = 0;
    for (int i = 0; i < 80; ++i) {
      Packet p = base;
      p.packet_id = 10'000 + i;
      if (l.net.enqueue(NodeId{0}, p)) ++accepted;
    }
    CHECK(accepted <= l.net.params().queue_capacity + 1);
    CHECK(l.net.local_congestion(NodeId{0}, 10.0, 0.0) > 0.0);
  }

  TEST_CASE("airtime follows payload, header and link rate") {
    Line l(2, 1.0);
    Packet p;
    p.payload_bytes = 512;
    CHECK(l.net.tx_duration(p) == doctest::Approx((512 + 52) * 8.0 / 2.0e6));
  }

  TEST_CASE("overhearing reaches every neighbor of the sender") {
    std::multimap<std::uint32_t, std::uint32_t> heard;  // sender -> hearer
    NetworkHooks hooks;
    hooks.on_overhear = [&](NodeId hearer, NodeId sender, NodeId, const Packet&) {
      heard.emplace(sender.value, hearer.value);
    };
    Line l(4, 10.0, hooks);
    l.net.add_flow(flow(0, 3, 1.0, 0.0));
    l.net.start();
    l.loop.run();
    // Node 1 relays to 2; both 0 and 2 hear it.
    auto [lo, hi] = heard.equal_range(1);
    std::vector<std::uint32_t> hearers;
    for (auto it = lo; it != hi; ++it) hearers.push_back(it->second);
    std::sort(hearers.begin(), hearers.end());
    CHECK(hearers == std::vector<std::uint32_t>{0, 2});
  }

  TEST_CASE("control messages reach in-range receivers after the control latency") {
    std::vector<std::pair<SimTime, std::uint32_t>> got;
    EventLoop* lp = nullptr;
    NetworkHooks hooks;
    hooks.on_control = [&](NodeId r, NodeId, const std::vector<std::uint8_t>&) { got.emplace_back(lp->now(), r.value); };
    Line l(4, 10.0, hooks);
    lp = &l.loop;
    l.net.send_control(NodeId{1}, std::nullopt, {1, 2, 3});
    l.net.send_control(NodeId{0}, NodeId{3}, {4});  // out of range
    l.loop.run();
    REQUIRE(got.size() == 2);
    CHECK(got[0].first == doctest::Approx(0.002));
    CHECK(got[0].second == 0);
    CHECK(got[1].second == 2);
    CHECK(l.net.totals().control_messages == 2);
  }
}

TEST_SUITE("routing") {
  TEST_CASE("shortest routes match exhaustive search on random graphs") {
    testing::Gen g(99);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + g.below(8);
      std::vector<std::vector<NodeId>> adj(n);
      for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b)
          if (g.unit() < 0.35) {
            adj[a].push_back(NodeId{b});
            adj[b].push_back(NodeId{a});
          }
      for (auto& l : adj) std::sort(l.begin(), l.end());
      const NodeId src{static_cast<std::uint32_t>(g.below(n))};
      const NodeId dst{static_cast<std::uint32_t>(g.below(n))};
      const NodeId banned{static_cast<std::uint32_t>(g.below(n))};
      std::function<bool(NodeId)> excluded;
      if (trial % 2 == 1) excluded = [banned](NodeId v) { return v == banned; };
      const auto got = compute_route(adj, src, dst, excluded);
      const auto want = brute_route(adj, src, dst, excluded);
      REQUIRE(got.has_value() == want.has_value());
      if (got) REQUIRE(*got == *want);
    }
  }
}

TEST_SUITE("channel_stats") {
  TEST_CASE("overlap fraction matches pairwise comparison") {
    testing::Gen g(5);
    for (int trial = 0; trial < 50; ++trial) {
      RtsLog log;
      std::vector<std::pair<SimTime, SimTime>> w;
      SimTime t = 0.0;
      for (int i = 0; i < 60; ++i) {
        t += g.between(0.0, 0.01);
        w.emplace_back(t, t + g.between(0.001, 0.006));
        log.record(w.back().first, w.back().second);
      }
      SimTime now = 0.0;
      for (const auto& x : w) now = std::max(now, x.second);
      std::size_t total = 0, over = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        ++total;
        bool o = false;
        for (std::size_t j = 0; j < w.size(); ++j)
          if (i != j && w[i].first < w[j].second && w[j].first < w[i].second) o = true;
        if (o) ++over;
      }
      REQUIRE(log.overlap_fraction(now + 1.0, now) == doctest::Approx(double(over) / double(total)));
    }
  }

  TEST_CASE("drop fraction counts overflows within the window only") {
    CongestionLog log;
    log.record(1.0, true);
    log.record(5.0, false);
    log.record(6.0, true);
    log.record(7.0, false);
    CHECK(log.drop_fraction(10.0, 7.0) == doctest::Approx(0.5));
    CHECK(log.drop_fraction(2.5, 7.0) == doctest::Approx(1.0 / 3.0));
    CHECK(log.drop_fraction(1.5, 7.0) == doctest::Approx(0.5));
    CHECK(log.drop_fraction(0.5, 7.0) == doctest::Approx(0.0));
    CHECK(log.drop_fraction(10.0, 100.0) == 0.0);
  }
}
