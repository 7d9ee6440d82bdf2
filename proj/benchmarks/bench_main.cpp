#include <benchmark/benchmark.h>

#include <vector>

#include "coopdetect/event_loop.hpp"
#include "coopdetect/experiment.hpp"
#include "coopdetect/messages.hpp"
#include "coopdetect/monitor.hpp"
#include "coopdetect/rng.hpp"
#include "coopdetect/trust.hpp"

using namespace coopdetect;

namespace {

std::vector<Observation> observations(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i) obs.push_back({NodeId{static_cast<std::uint32_t>(i)}, rng.uniform01()});
  return obs;
}

SignedCertificate certificate(const KeyRegistry& keys, std::size_t responders) {
  TrustCertificate c;
  c.round = RoundRef{1, NodeId{0}, NodeId{1}};
  c.issued_at = 10.0;
  std::vector<Observation> obs;
  for (std::uint32_t i = 2; i < 2 + responders; ++i) {
    BehaviorResponse r{c.round, NodeId{i}, 0.1 * (i % 10), {NodeId{1}, NodeId{i + 1}}};
    c.responses.push_back(sign_response(keys, r, 10.0, i));
    obs.push_back({NodeId{i}, r.maliciousness});
  }
  const auto g = compute_group_trust(obs, 0.5);
  c.group_trust = g->t_certificate;
  c.majority = g->majority;
  return sign_certificate(keys, c, 10.0, 1000);
}

void BM_GroupTrust(benchmark::State& state) {
  const auto obs = observations(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compute_group_trust(obs, 0.5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GroupTrust)->RangeMultiplier(4)->Range(2, 512)->Complexity();

void BM_TrustUpdate(benchmark::State& state) {
  TrustTable table(TrustParams{});
  const std::vector<NodeId> group{NodeId{1}, NodeId{2}, NodeId{3}};
  SimTime t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.apply_certificate(NodeId{9}, 0.4, 0.6, group, t));
    t += 7.0;
  }
}
BENCHMARK(BM_TrustUpdate);

void BM_FrameRoundTrip(benchmark::State& state) {
  const auto keys = KeyRegistry::bootstrap(600, 1);
  const Frame f =
      make_frame(keys, NodeId{1}, CertificateBroadcast{certificate(keys, static_cast<std::size_t>(state.range(0)))},
                 10.0, 5, 3);
  for (auto _ : state) {
    const auto wire = encode_frame(f);
    benchmark::DoNotOptimize(decode_frame(wire));
    state.SetBytesProcessed(state.bytes_processed() + static_cast<std::int64_t>(wire.size()));
  }
}
BENCHMARK(BM_FrameRoundTrip)->Arg(1)->Arg(8)->Arg(64);

void BM_AuthenticateFrame(benchmark::State& state) {
  const auto keys = KeyRegistry::bootstrap(20, 1);
  const Frame f = make_frame(keys, NodeId{1}, CertificateBroadcast{certificate(keys, 8)}, 10.0, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(authenticate(keys, f.auth, signed_bytes(f.body)));
}
BENCHMARK(BM_AuthenticateFrame);

void BM_EventLoop(benchmark::State& state) {
  const auto n = state.range(0);
  for (auto _ : state) {
    EventLoop loop;
    Rng rng(1);
    std::int64_t fired = 0;
    for (std::int64_t i = 0; i < n; ++i) loop.schedule_at(rng.uniform(0.0, 100.0), [&fired] { ++fired; });
    loop.run();
    benchmark::DoNotOptimize(fired);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EventLoop)->Arg(1 << 10)->Arg(1 << 16);

void BM_SuspicionWindow(benchmark::State& state) {
  Monitor m(NodeId{0}, MonitorParams{}, Rng(2));
  for (std::uint32_t i = 1; i <= 50; ++i) m.record_misbehavior(NodeId{i});
  SimTime t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.end_window(t, ChannelEstimates{0.05, 0.05}));
    t += 10.0;
  }
}
BENCHMARK(BM_SuspicionWindow);

void BM_ReferenceScenario(benchmark::State& state) {
  ScenarioConfig c = table1_preset();
  c.world.duration = static_cast<double>(state.range(0));
  c.variant = DetectorVariant::kProposed;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(c));
}
BENCHMARK(BM_ReferenceScenario)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
