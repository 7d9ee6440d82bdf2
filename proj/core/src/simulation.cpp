#include "coopdetect/simulation.hpp"

#include <algorithm>
#include <numeric>

namespace coopdetect {

namespace {

std::vector<std::uint32_t> sample_without_replacement(std::vector<std::uint32_t> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

Simulation::Simulation(ScenarioConfig config, TraceSink* trace)
    : config_(std::move(config)), trace_(trace), loop_(config_.world.duration) {
  if (auto problems = config_.validate(); !problems.empty()) throw ConfigError("invalid config", problems);
  const std::uint32_t n = config_.world.nodes;
  if (!config_.layout.positions.empty()) {
    world_ = std::make_unique<World>(config_.layout.positions, config_.world.range, config_.world.width,
                                     config_.world.height);
  } else {
    MobilityParams mp;
    mp.model = config_.mobility.model;
    mp.width = config_.world.width;
    mp.height = config_.world.height;
    mp.min_speed = config_.mobility.min_speed;
    mp.max_speed = config_.mobility.max_speed;
    mp.pause = config_.mobility.pause;
    world_ = std::make_unique<World>(n, mp, config_.world.range, config_.seed);
  }
  keys_ = KeyRegistry::bootstrap(n, config_.seed);
  monitors_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    monitors_.emplace_back(NodeId{i}, config_.monitor, Rng::stream(config_.seed, rng_purpose::kMonitor, i));
  watched_forwards_.assign(n, 0);
  assign_roles();

  network_ = std::make_unique<Network>(loop_, *world_, config_.network, config_.seed, make_hooks(), trace_);
  for (std::uint32_t i = 0; i < n; ++i)
    if (drop_probability_[i] >= 0.0)
      network_->set_adversary({NodeId{i}, drop_probability_[i], config_.adversaries.modify_probability});
  for (std::size_t f = 0; f < flows_.size(); ++f) {
    Flow flow;
    flow.flow_id = static_cast<FlowId>(f);
    flow.src = flows_[f].first;
    flow.dst = flows_[f].second;
    flow.rate = config_.traffic.rate;
    flow.start = 0.0;
    flow.stop = config_.world.duration;
    flow.payload_bytes = config_.traffic.payload;
    network_->add_flow(flow);
  }

  if (config_.variant == DetectorVariant::kProposed) {
    ctx_ = std::make_unique<ProtocolContext>(
        ProtocolContext{loop_, *world_, *network_, keys_, config_.trust, config_.freshness_window, trace_});
    agents_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      NodeConduct conduct;
      if (drop_probability_[i] >= 0.0) conduct.conduct = config_.adversaries.conduct;
      conduct.false_accuser = false_accuser_[i];
      agents_.push_back(std::make_unique<TrustAgent>(NodeId{i}, *ctx_, monitors_[i], conduct));
    }
  }

  if (trace_) {
    nlohmann::json adv = nlohmann::json::array();
    for (std::uint32_t i = 0; i < n; ++i)
      if (drop_probability_[i] >= 0.0) adv.push_back({{"node", i}, {"drop_probability", drop_probability_[i]}});
    nlohmann::json flows = nlohmann::json::array();
    for (const auto& [s, d] : flows_) flows.push_back({s.value, d.value});
    trace_->header({{"seed", config_.seed},
                    {"variant", to_string(config_.variant)},
                    {"nodes", n},
                    {"adversaries", adv},
                    {"flows", flows}});
  }
}

void Simulation::assign_roles() {
  const std::uint32_t n = config_.world.nodes;
  Rng roles = Rng::stream(config_.seed, rng_purpose::kRoles);
  drop_probability_.assign(n, -1.0);
  false_accuser_.assign(n, false);

  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  const bool explicit_roles = !config_.layout.adversaries.empty() || !config_.layout.false_accusers.empty();
  std::vector<std::uint32_t> adversaries = config_.layout.adversaries;
  std::vector<std::uint32_t> accusers = config_.layout.false_accusers;
  if (!explicit_roles) {
    adversaries = sample_without_replacement(all, config_.adversaries.count, roles);
    std::vector<std::uint32_t> rest;
    for (std::uint32_t i : all)
      if (!std::binary_search(adversaries.begin(), adversaries.end(), i)) rest.push_back(i);
    accusers = sample_without_replacement(rest, config_.adversaries.false_accusers, roles);
  }
  const double lo = config_.adversaries.drop_probability_min;
  const double hi = config_.adversaries.drop_probability_max;
  for (std::uint32_t a : adversaries) drop_probability_[a] = lo == hi ? lo : roles.uniform(lo, hi);
  for (std::uint32_t a : accusers) false_accuser_[a] = true;

  if (!config_.layout.flows.empty()) {
    for (const auto& [s, d] : config_.layout.flows) flows_.emplace_back(NodeId{s}, NodeId{d});
    return;
  }
  // Endpoints are drawn from nodes that are neither droppers nor false accusers.
  std::vector<std::uint32_t> honest;
  for (std::uint32_t i = 0; i < n; ++i)
    if (drop_probability_[i] < 0.0 && !false_accuser_[i]) honest.push_back(i);
  Rng flows = Rng::stream(config_.seed, rng_purpose::kFlows);
  if (honest.size() < 2) return;
  for (std::uint32_t f = 0; f < config_.traffic.flows; ++f) {
    const auto s = honest[flows.below(honest.size())];
    std::uint32_t d = s;
    while (d == s) d = honest[flows.below(honest.size())];
    flows_.emplace_back(NodeId{s}, NodeId{d});
  }
}

void Simulation::note_watch(PacketId id, NodeId forwarder) {
  if (watched_.emplace(id, forwarder).second) ++watched_forwards_[forwarder.value];
}

NetworkHooks Simulation::make_hooks() {
  NetworkHooks h;
  const bool proposed = config_.variant == DetectorVariant::kProposed;
  h.on_sent = [this](NodeId sender, NodeId receiver, const Packet& p) {
    const SimTime now = loop_.now();
    Monitor& m = monitors_[sender.value];
    m.note_interaction(receiver, now);
    if (m.watch_sent(p, receiver, now)) note_watch(p.packet_id, receiver);
  };
  h.on_overhear = [this](NodeId hearer, NodeId sender, NodeId receiver, const Packet& p) {
    const SimTime now = loop_.now();
    Monitor& m = monitors_[hearer.value];
    m.observe_forward(sender, p, now);
    if (hearer == receiver) {
      m.note_interaction(sender, now);
    } else if (m.watch_overheard(p, sender, receiver, world_->in_range(hearer, receiver, now), now)) {
      note_watch(p.packet_id, receiver);
      m.note_interaction(receiver, now);
    }
    if (!agents_.empty() && p.piggyback) agents_[hearer.value]->on_piggyback(sender, *p.piggyback);
  };
  if (proposed) {
    h.on_control = [this](NodeId receiver, NodeId sender, const std::vector<std::uint8_t>& bytes) {
      agents_[receiver.value]->on_control(sender, bytes);
    };
    h.attach = [this](NodeId sender, Packet& p) { p.piggyback = agents_[sender.value]->piggyback(); };
    h.route_excluded = [this](NodeId router, NodeId candidate) {
      return agents_[router.value]->table().blacklisted(candidate);
    };
  }
  return h;
}

void Simulation::window_tick(SimTime at) {
  const SimTime w = config_.monitor.stats_window;
  for (std::uint32_t i = 0; i < monitors_.size(); ++i) {
    const NodeId self{i};
    const ChannelEstimates ch{network_->local_congestion(self, w, at), network_->rts_overlap_fraction(self, w, at)};
    const auto triggered = monitors_[i].end_window(at, ch);
    for (NodeId accused : triggered) {
      if (trace_)
        trace_->event(at, "trigger",
                      {{"node", i}, {"accused", accused.value}, {"p", monitors_[i].suspicion(accused)}});
      if (!agents_.empty()) agents_[i]->on_trigger(accused);
    }
  }
  if (at + w <= config_.world.duration) loop_.schedule_at(at + w, [this, at, w] { window_tick(at + w); });
}

RunMetrics Simulation::run() {
  if (!ran_) {
    ran_ = true;
    network_->start();
    for (auto& a : agents_) a->start();
    const SimTime w = config_.monitor.stats_window;
    if (w <= config_.world.duration) loop_.schedule_at(w, [this, w] { window_tick(w); });
    loop_.run();
  }
  return metrics();
}

bool Simulation::complains(NodeId observer, NodeId subject) const {
  if (observer == subject) return false;
  switch (config_.variant) {
    case DetectorVariant::kProposed:
      return agents_[observer.value]->table().status(subject) != TrustStatus::kNormal;
    case DetectorVariant::kNaiveWatchdog: {
      const SuspicionState* st = monitors_[observer.value].state(subject);
      if (st == nullptr || st->total_watched == 0) return false;
      const double ratio = static_cast<double>(st->total_dropped + st->total_modified) /
                           static_cast<double>(st->total_watched);
      return ratio > config_.monitor.suspicion_threshold;
    }
    case DetectorVariant::kIndividualObservation: {
      const SuspicionState* st = monitors_[observer.value].state(subject);
      return st != nullptr && st->ever_triggered;
    }
  }
  return false;
}

bool Simulation::flagged(NodeId subject) const {
  if (config_.variant != DetectorVariant::kProposed) {
    for (std::uint32_t w = 0; w < monitors_.size(); ++w)
      if (complains(NodeId{w}, subject)) return true;
    return false;
  }
  for (std::uint32_t w = 0; w < agents_.size(); ++w) {
    if (w == subject.value) continue;
    const TrustTable& t = agents_[w]->table();
    if (t.status(subject) == TrustStatus::kMalicious || t.trust(subject) < config_.trust.blacklist_threshold)
      return true;
  }
  return false;
}

RunMetrics Simulation::metrics() const {
  RunMetrics m;
  m.seed = config_.seed;
  m.variant = config_.variant;
  const std::uint32_t n = static_cast<std::uint32_t>(monitors_.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    const NodeId id{i};
    NodeReport r;
    r.node = id;
    r.malicious = drop_probability_[i] >= 0.0;
    r.drop_probability = r.malicious ? drop_probability_[i] : 0.0;
    r.false_accuser = false_accuser_[i];
    r.forward_requests = network_->forward_requests(id);
    r.on_path = r.forward_requests > 0;
    r.watched_forwards = watched_forwards_[i];
    r.flagged = flagged(id);
    for (std::uint32_t w = 0; w < n; ++w) {
      if (complains(NodeId{w}, id)) ++r.complaints;
      if (const SuspicionState* st = monitors_[w].state(id)) r.max_suspicion = std::max(r.max_suspicion, st->max_p);
    }
    if (r.on_path) {
      if (r.malicious) {
        ++m.malicious_on_path;
        if (r.flagged) ++m.malicious_flagged;
      } else {
        ++m.honest_on_path;
        if (r.flagged) ++m.honest_flagged;
      }
    }
    m.nodes.push_back(r);
  }
  m.false_alarm_rate = m.honest_on_path == 0 ? 0.0 : double(m.honest_flagged) / double(m.honest_on_path);
  m.detection_rate = m.malicious_on_path == 0 ? 1.0 : double(m.malicious_flagged) / double(m.malicious_on_path);

  const auto t = network_->totals();
  auto fate = [&](PacketFate f) { return t.by_fate[static_cast<std::size_t>(f)]; };
  m.originated = t.originated;
  m.delivered = fate(PacketFate::kDelivered);
  m.malicious_drops = fate(PacketFate::kMaliciousDrop);
  m.congestion_drops = fate(PacketFate::kCongestionDrop);
  m.collision_losses = fate(PacketFate::kCollisionLoss);
  m.modified = fate(PacketFate::kModified);
  m.route_expired = fate(PacketFate::kRouteExpired);
  m.in_flight = fate(PacketFate::kInFlight);
  m.control_messages = t.control_messages;
  for (const auto& a : agents_) {
    m.challenges += a->counters().challenges_sent;
    m.certificates += a->counters().certificates_assembled;
    m.alarms += a->counters().alarms_raised;
  }
  return m;
}

}  // namespace coopdetect
