#include "coopdetect/protocol.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <type_traits>

namespace coopdetect {

std::string_view to_string(CertificateCheck c) {
  switch (c) {
    case CertificateCheck::kAccept: return "accept";
    case CertificateCheck::kTampered: return "tampered";
    case CertificateCheck::kStale: return "stale";
    case CertificateCheck::kRecomputeMismatch: return "recompute_mismatch";
    case CertificateCheck::kResponseOmitted: return "response_omitted";
  }
  return "?";
}

CertificateCheck verify_certificate(const KeyRegistry& keys, const SignedCertificate& sc,
                                    const SignedResponse* own_response, SimTime now, const TrustParams& params,
                                    SimTime response_freshness) {
  const TrustCertificate& c = sc.cert;
  if (sc.auth.sender != c.round.accused) return CertificateCheck::kTampered;
  if (authenticate(keys, sc.auth, signed_bytes(c)) != AuthStatus::kAccept) return CertificateCheck::kTampered;
  for (const auto& sr : c.responses) {
    if (sr.auth.sender != sr.response.responder || sr.response.round != c.round ||
        sr.response.responder == c.round.accused)
      return CertificateCheck::kTampered;
    if (authenticate(keys, sr.auth, signed_bytes(sr.response)) != AuthStatus::kAccept)
      return CertificateCheck::kTampered;
  }

  if (c.issued_at > now || now - c.issued_at > params.certificate_lifetime) return CertificateCheck::kStale;
  for (const auto& sr : c.responses)
    if (sr.auth.timestamp > c.issued_at || c.issued_at - sr.auth.timestamp > response_freshness)
      return CertificateCheck::kStale;

  if (own_response != nullptr &&
      std::find(c.responses.begin(), c.responses.end(), *own_response) == c.responses.end())
    return CertificateCheck::kResponseOmitted;

  std::set<NodeId> responders;
  std::vector<Observation> obs;
  for (const auto& sr : c.responses) {
    if (!responders.insert(sr.response.responder).second) return CertificateCheck::kRecomputeMismatch;
    obs.push_back({sr.response.responder, sr.response.maliciousness});
  }
  const auto g = compute_group_trust(obs, params.trust_threshold);
  if (!g || g->t_certificate != c.group_trust || g->majority != c.majority)
    return CertificateCheck::kRecomputeMismatch;
  return CertificateCheck::kAccept;
}

int neighborhood_diameter(NodeId accused, std::span<const SignedResponse> responses) {
  std::map<NodeId, std::set<NodeId>> adj;
  auto link = [&](NodeId a, NodeId b) {
    if (a == b) return;
    adj[a].insert(b);
    adj[b].insert(a);
  };
  adj[accused];
  for (const auto& sr : responses) {
    link(accused, sr.response.responder);
    for (NodeId n : sr.response.neighbors) link(sr.response.responder, n);
  }
  int diameter = 0;
  for (const auto& [start, _] : adj) {
    std::map<NodeId, int> dist{{start, 0}};
    std::deque<NodeId> q{start};
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop_front();
      for (NodeId v : adj[u]) {
        if (dist.contains(v)) continue;
        dist[v] = dist[u] + 1;
        diameter = std::max(diameter, dist[v]);
        q.push_back(v);
      }
    }
  }
  return diameter;
}

VoteTally whistle_blower_vote(const GlobalAlarm& alarm, std::span<const Vote> votes, const TrustParams& params) {
  VoteTally t;
  std::set<NodeId> seen;
  for (const Vote& v : votes) {
    if (v.alarm.subject != alarm.subject || v.voter == alarm.subject) continue;
    if (v.last_interaction > alarm.issued_at + params.vote_duration) continue;
    if (alarm.issued_at - v.last_interaction > params.vote_interaction_window) continue;
    if (!seen.insert(v.voter).second) continue;
    ++t.eligible;
    if (v.verdict == Verdict::kCondemn) ++t.condemn;
  }
  t.verdict = 2 * t.condemn > t.eligible ? Verdict::kCondemn : Verdict::kAbsolve;
  return t;
}

TrustAgent::TrustAgent(NodeId self, ProtocolContext& ctx, Monitor& monitor, NodeConduct conduct)
    : self_(self),
      ctx_(ctx),
      monitor_(monitor),
      conduct_(conduct),
      table_(ctx.params),
      guard_(ctx.freshness_window) {}

void TrustAgent::trace(std::string_view kind, nlohmann::json fields) {
  if (ctx_.trace == nullptr) return;
  fields["node"] = self_.value;
  ctx_.trace->event(ctx_.loop.now(), kind, std::move(fields));
}

void TrustAgent::start() {
  const SimTime period = ctx_.params.exchange_period;
  if (period <= 0.0) return;
  // Stagger so neighbors do not exchange in lockstep.
  const SimTime offset = period * static_cast<double>(self_.value % 97) / 97.0;
  ctx_.loop.schedule_at(ctx_.loop.now() + period + offset * 0.1, [this] { exchange_tick(); });
}

void TrustAgent::send(std::optional<NodeId> to, MessageBody body, std::uint8_t ttl) {
  const Frame f = make_frame(ctx_.keys, self_, std::move(body), ctx_.loop.now(), nonces_.next(), ttl);
  ctx_.network.send_control(self_, to, encode_frame(f));
}

void TrustAgent::relay_raw(std::span<const std::uint8_t> raw, std::uint8_t ttl) {
  std::vector<std::uint8_t> copy(raw.begin(), raw.end());
  copy[2] = ttl;  // the only hop-mutable byte
  ctx_.network.send_control(self_, std::nullopt, std::move(copy));
}

bool TrustAgent::verify_fresh(const Frame& f) {
  return guard_.verify(ctx_.keys, f.auth, signed_bytes(f.body), ctx_.loop.now()) == AuthStatus::kAccept;
}

void TrustAgent::on_trigger(NodeId accused) { issue_challenge(accused); }

bool TrustAgent::issue_challenge(NodeId accused) {
  if (accused == self_ || accuser_rounds_.contains(accused) || table_.blacklisted(accused)) return false;
  table_.mark_self_accused(accused, true);
  const SimTime now = ctx_.loop.now();
  if (!ctx_.world.in_range(self_, accused, now)) {
    trace("challenge_unreachable", {{"accused", accused.value}});
    return false;
  }
  RoundRef round{next_round_++, self_, accused};
  const std::uint64_t id = round.round_id;
  const EventHandle timer =
      ctx_.loop.schedule_in(ctx_.params.challenge_timeout, [this, accused, id] { challenge_timeout(accused, id); });
  accuser_rounds_[accused] = AccuserRound{round, timer, false};
  monitor_.set_challenge_pending(accused, true);
  ++counters_.challenges_sent;
  trace("challenge", {{"accused", accused.value}, {"round", id}});
  send(accused, Challenge{round});
  return true;
}

void TrustAgent::challenge_timeout(NodeId accused, std::uint64_t round_id) {
  auto it = accuser_rounds_.find(accused);
  if (it == accuser_rounds_.end() || it->second.round.round_id != round_id) return;
  const bool acked = it->second.acked;
  accuser_rounds_.erase(it);
  monitor_.set_challenge_pending(accused, false);
  monitor_.record_misbehavior(accused);
  trace("challenge_timeout", {{"accused", accused.value}, {"round", round_id}, {"acked", acked}});
  if (acked) return;
  ++counters_.silent_timeouts;
  if (++silent_rounds_[accused] >= ctx_.params.silent_rounds_for_alarm) {
    silent_rounds_[accused] = 0;
    raise_global_alarm(accused);
  }
}

void TrustAgent::on_control(NodeId from, std::span<const std::uint8_t> bytes) {
  Frame f;
  try {
    f = decode_frame(bytes);
  } catch (const DecodeError&) {
    ++counters_.ignored_messages;
    return;
  }
  if (table_.blacklisted(from)) {
    ++counters_.ignored_messages;
    return;
  }
  switch (type_of(f.body)) {
    case MessageType::kChallenge: handle_challenge(from, f, bytes); break;
    case MessageType::kAck: handle_ack(from, f); break;
    case MessageType::kVerifyBehavior: handle_verify(from, f); break;
    case MessageType::kBehaviorResponse: handle_response(from, f); break;
    case MessageType::kCertificateBroadcast: {
      if (f.auth.sender != from || !verify_fresh(f)) {
        ++counters_.ignored_messages;
        return;
      }
      const auto& sc = std::get<CertificateBroadcast>(f.body).certificate;
      handle_certificate(from, sc, f.ttl > 0 ? f.ttl - 1 : -1);
      break;
    }
    case MessageType::kCertificateOffer: {
      if (f.auth.sender != from || !verify_fresh(f)) {
        ++counters_.ignored_messages;
        return;
      }
      for (const auto& sc : std::get<CertificateOffer>(f.body).certificates)
        handle_certificate(from, sc, static_cast<int>(sc.cert.flood_hops) - 1);
      break;
    }
    case MessageType::kGlobalAlarm: handle_alarm(from, f, bytes); break;
    case MessageType::kVote: handle_vote(from, f, bytes); break;
  }
}

void TrustAgent::handle_challenge(NodeId from, const Frame& f, std::span<const std::uint8_t>) {
  const auto& c = std::get<Challenge>(f.body);
  if (c.accused != self_ || c.accuser != from || f.auth.sender != from || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  if (conduct_.conduct == ProtocolConduct::kSilent) {
    trace("challenge_ignored", {{"accuser", from.value}});
    return;
  }
  const RoundRef round = c;
  send(from, Ack{round});
  send(std::nullopt, VerifyBehavior{round});
  const std::uint64_t key = next_collect_key_++;
  collecting_[key] = CollectingRound{round, {}};
  ctx_.loop.schedule_in(ctx_.params.collection_timeout, [this, key] { assemble(key); });
}

void TrustAgent::handle_ack(NodeId from, const Frame& f) {
  const auto& a = std::get<Ack>(f.body);
  if (a.accuser != self_ || a.accused != from || f.auth.sender != from || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  auto it = accuser_rounds_.find(from);
  if (it != accuser_rounds_.end() && it->second.round == static_cast<const RoundRef&>(a)) it->second.acked = true;
}

void TrustAgent::handle_verify(NodeId from, const Frame& f) {
  const auto& v = std::get<VerifyBehavior>(f.body);
  if (v.accused != from || f.auth.sender != from || v.accused == self_ || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  double m;
  if (conduct_.false_accuser) {
    m = 1.0;
  } else {
    const SuspicionState* st = monitor_.state(v.accused);
    // Without first-hand history of the accused the neighbor abstains.
    if (st == nullptr || st->total_watched == 0) return;
    m = st->p;
  }
  BehaviorResponse r;
  r.round = v;
  r.responder = self_;
  r.maliciousness = m;
  r.neighbors = ctx_.world.neighbors(self_, ctx_.loop.now());
  const Frame out = make_frame(ctx_.keys, self_, r, ctx_.loop.now(), nonces_.next());
  my_responses_[{v.round_id, v.accuser.value, v.accused.value}] = SignedResponse{r, out.auth};
  ctx_.network.send_control(self_, from, encode_frame(out));
}

void TrustAgent::handle_response(NodeId from, const Frame& f) {
  const auto& r = std::get<BehaviorResponse>(f.body);
  if (r.responder != from || f.auth.sender != from || r.round.accused != self_ || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  for (auto& [key, round] : collecting_) {
    if (round.round != r.round) continue;
    const bool dup = std::any_of(round.responses.begin(), round.responses.end(),
                                 [&](const SignedResponse& s) { return s.response.responder == from; });
    if (!dup) round.responses.push_back(SignedResponse{r, f.auth});
    return;
  }
}

void TrustAgent::assemble(std::uint64_t key) {
  auto it = collecting_.find(key);
  if (it == collecting_.end()) return;
  CollectingRound round = std::move(it->second);
  collecting_.erase(it);

  const double threshold = ctx_.params.trust_threshold;
  if (conduct_.conduct == ProtocolConduct::kOmitAccusations) {
    std::erase_if(round.responses,
                  [&](const SignedResponse& s) { return 1.0 - s.response.maliciousness < threshold; });
  }
  std::sort(round.responses.begin(), round.responses.end(),
            [](const SignedResponse& a, const SignedResponse& b) { return a.response.responder < b.response.responder; });
  std::vector<Observation> obs;
  for (const auto& s : round.responses) obs.push_back({s.response.responder, s.response.maliciousness});
  const auto g = compute_group_trust(obs, threshold);
  if (!g) {
    trace("no_quorum", {{"accuser", round.round.accuser.value}, {"round", round.round.round_id}});
    return;
  }
  const int hops = std::clamp(std::max(ctx_.params.flood_hops_min, neighborhood_diameter(self_, round.responses)), 1,
                              static_cast<int>(std::numeric_limits<std::uint8_t>::max()));
  TrustCertificate cert;
  cert.round = round.round;
  cert.issued_at = ctx_.loop.now();
  cert.group_trust = g->t_certificate;
  cert.flood_hops = static_cast<std::uint32_t>(hops);
  cert.responses = std::move(round.responses);
  cert.majority = g->majority;
  SignedCertificate sc = sign_certificate(ctx_.keys, std::move(cert), ctx_.loop.now(), nonces_.next());
  ++counters_.certificates_assembled;
  trace("certificate", {{"accuser", round.round.accuser.value},
                        {"round", round.round.round_id},
                        {"group_trust", sc.cert.group_trust},
                        {"responders", sc.cert.responses.size()},
                        {"hops", hops}});
  cache_[certificate_id(sc.cert)] = CachedCertificate{sc, certificate_digest(sc)};
  send(std::nullopt, CertificateBroadcast{sc}, static_cast<std::uint8_t>(hops - 1));
}

void TrustAgent::handle_certificate(NodeId from, const SignedCertificate& sc, int relay_ttl) {
  const CertificateId id = certificate_id(sc.cert);
  const Digest256 digest = certificate_digest(sc);
  const NodeId accused = sc.cert.round.accused;
  const SimTime now = ctx_.loop.now();

  const SignedResponse* own = nullptr;
  if (auto r = my_responses_.find({id.round_id, id.accuser, id.accused}); r != my_responses_.end()) own = &r->second;

  if (auto hit = cache_.find(id); hit != cache_.end()) {
    if (hit->second.digest == digest) return;  // duplicate copy: no rebroadcast
    const CertificateCheck check = verify_certificate(ctx_.keys, sc, own, now, ctx_.params, ctx_.freshness_window);
    if (check != CertificateCheck::kAccept) {
      ++counters_.certificates_rejected;
      monitor_.record_misbehavior(from);
      trace("certificate_rejected", {{"from", from.value}, {"accused", accused.value}, {"reason", to_string(check)}});
    }
    return;
  }

  const CertificateCheck check = verify_certificate(ctx_.keys, sc, own, now, ctx_.params, ctx_.freshness_window);
  if (check != CertificateCheck::kAccept) {
    ++counters_.certificates_rejected;
    trace("certificate_rejected", {{"from", from.value}, {"accused", accused.value}, {"reason", to_string(check)}});
    if (check == CertificateCheck::kTampered) {
      monitor_.record_misbehavior(from);
    } else if (check == CertificateCheck::kRecomputeMismatch || check == CertificateCheck::kResponseOmitted) {
      monitor_.record_misbehavior(accused);
    }
    return;
  }

  cache_[id] = CachedCertificate{sc, digest};
  ++counters_.certificates_accepted;
  if (auto r = accuser_rounds_.find(accused);
      r != accuser_rounds_.end() && r->second.round == sc.cert.round) {
    ctx_.loop.cancel(r->second.timer);
    accuser_rounds_.erase(r);
    monitor_.set_challenge_pending(accused, false);
    silent_rounds_[accused] = 0;
  }
  if (accused != self_) apply_certificate(sc.cert);
  if (relay_ttl >= 0) {
    ++counters_.rebroadcasts;
    send(std::nullopt, CertificateBroadcast{sc}, static_cast<std::uint8_t>(std::min(relay_ttl, 255)));
  }
}

void TrustAgent::apply_certificate(const TrustCertificate& cert) {
  const NodeId accused = cert.round.accused;
  std::vector<Observation> obs;
  std::vector<NodeId> responders;
  for (const auto& s : cert.responses) {
    obs.push_back({s.response.responder, s.response.maliciousness});
    responders.push_back(s.response.responder);
  }
  const auto g = compute_group_trust(obs, ctx_.params.trust_threshold,
                                     [this](NodeId n) { return table_.trust(n); });
  const auto u = table_.apply_certificate(accused, cert.group_trust, g->alpha1_c, std::move(responders), cert.issued_at);
  trace("trust_update", {{"subject", accused.value},
                         {"t_old", u.t_old},
                         {"t_new", u.t_new},
                         {"t_cert", cert.group_trust},
                         {"beta", u.beta},
                         {"k", u.k}});
  if (cert.group_trust >= ctx_.params.trust_threshold && monitor_.suspicion(accused) <=
                                                             monitor_.params().suspicion_threshold)
    table_.mark_self_accused(accused, false);
  if (u.t_new < ctx_.params.blacklist_threshold) raise_global_alarm(accused);
}

bool TrustAgent::raise_global_alarm(NodeId subject) {
  if (subject == self_ || open_votes_.contains(subject) || table_.blacklisted(subject)) return false;
  const GlobalAlarm alarm{subject, self_, ctx_.loop.now()};
  table_.mark_alarm_raised(subject);
  ++counters_.alarms_raised;
  seen_alarms_.insert({alarm.subject.value, alarm.origin.value, alarm.issued_at});
  trace("alarm", {{"subject", subject.value}});
  open_vote(alarm);
  const auto ttl = static_cast<std::uint8_t>(std::min<std::size_t>(255, ctx_.keys.size()));
  send(std::nullopt, alarm, ttl);
  cast_vote(alarm);
  return true;
}

void TrustAgent::handle_alarm(NodeId, const Frame& f, std::span<const std::uint8_t> raw) {
  const auto& a = std::get<GlobalAlarm>(f.body);
  if (!seen_alarms_.insert({a.subject.value, a.origin.value, a.issued_at}).second) return;
  if (f.auth.sender != a.origin || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  if (f.ttl > 0) relay_raw(raw, f.ttl - 1);
  if (a.subject == self_ || table_.blacklisted(a.subject)) return;
  if (open_votes_.contains(a.subject)) return;
  open_vote(a);
  cast_vote(a);
}

void TrustAgent::open_vote(const GlobalAlarm& alarm) {
  if (open_votes_.contains(alarm.subject)) return;
  open_votes_[alarm.subject] = OpenVote{alarm, {}};
  const SimTime close = std::max(ctx_.loop.now(), alarm.issued_at + ctx_.params.vote_duration);
  const NodeId subject = alarm.subject;
  ctx_.loop.schedule_at(close, [this, subject] { close_vote(subject); });
}

void TrustAgent::cast_vote(const GlobalAlarm& alarm) {
  if (alarm.subject == self_) return;
  Vote v;
  v.alarm = alarm;
  v.voter = self_;
  if (conduct_.false_accuser) {
    v.verdict = Verdict::kCondemn;
    v.last_interaction = alarm.issued_at;
  } else {
    const auto last = monitor_.last_interaction(alarm.subject);
    if (!last || alarm.issued_at - *last > ctx_.params.vote_interaction_window) return;
    v.last_interaction = *last;
    const bool distrusted = table_.trust(alarm.subject) < ctx_.params.trust_threshold ||
                            monitor_.suspicion(alarm.subject) > monitor_.params().suspicion_threshold;
    v.verdict = distrusted ? Verdict::kCondemn : Verdict::kAbsolve;
  }
  seen_votes_.insert({v.voter.value, alarm.subject.value, alarm.origin.value, alarm.issued_at});
  if (auto it = open_votes_.find(alarm.subject); it != open_votes_.end()) it->second.votes.emplace(self_, v);
  ++counters_.votes_cast;
  const auto ttl = static_cast<std::uint8_t>(std::min<std::size_t>(255, ctx_.keys.size()));
  send(std::nullopt, v, ttl);
}

void TrustAgent::handle_vote(NodeId, const Frame& f, std::span<const std::uint8_t> raw) {
  const auto& v = std::get<Vote>(f.body);
  if (!seen_votes_.insert({v.voter.value, v.alarm.subject.value, v.alarm.origin.value, v.alarm.issued_at}).second)
    return;
  if (f.auth.sender != v.voter || !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  if (f.ttl > 0) relay_raw(raw, f.ttl - 1);
  if (v.alarm.subject == self_ || table_.blacklisted(v.alarm.subject)) return;
  if (!open_votes_.contains(v.alarm.subject)) {
    open_vote(v.alarm);
    cast_vote(v.alarm);
  }
  open_votes_[v.alarm.subject].votes.emplace(v.voter, v);
}

void TrustAgent::close_vote(NodeId subject) {
  auto it = open_votes_.find(subject);
  if (it == open_votes_.end()) return;
  std::vector<Vote> votes;
  for (const auto& [voter, v] : it->second.votes) votes.push_back(v);
  const VoteTally t = whistle_blower_vote(it->second.alarm, votes, ctx_.params);
  open_votes_.erase(it);
  if (t.verdict == Verdict::kCondemn) {
    table_.mark_condemned(subject);
  } else {
    table_.mark_surveillance(subject);
    monitor_.set_surveillance(subject, true);
  }
  trace("vote_closed", {{"subject", subject.value},
                        {"eligible", t.eligible},
                        {"condemn", t.condemn},
                        {"verdict", t.verdict == Verdict::kCondemn ? "condemn" : "surveillance"}});
}

void TrustAgent::prune(SimTime now) {
  const SimTime life = ctx_.params.certificate_lifetime;
  std::erase_if(cache_, [&](const auto& kv) { return now - kv.second.cert.cert.issued_at > life; });
  std::erase_if(my_responses_, [&](const auto& kv) { return now - kv.second.auth.timestamp > life; });
}

void TrustAgent::exchange_tick() {
  const SimTime now = ctx_.loop.now();
  prune(now);
  if (!cache_.empty() && !ctx_.world.neighbors(self_, now).empty()) {
    CertificateOffer offer;
    for (const auto& [id, c] : cache_) offer.certificates.push_back(c.cert);
    send(std::nullopt, std::move(offer));
  }
  ctx_.loop.schedule_in(ctx_.params.exchange_period, [this] { exchange_tick(); });
}

std::shared_ptr<const std::vector<std::uint8_t>> TrustAgent::piggyback() {
  if (cache_.empty()) return nullptr;
  piggyback_cursor_ %= cache_.size();
  auto it = std::next(cache_.begin(), static_cast<std::ptrdiff_t>(piggyback_cursor_++));
  if (ctx_.loop.now() - it->second.cert.cert.issued_at > ctx_.params.certificate_lifetime) return nullptr;
  const Frame f = make_frame(ctx_.keys, self_, CertificateBroadcast{it->second.cert}, ctx_.loop.now(), nonces_.next());
  return std::make_shared<const std::vector<std::uint8_t>>(encode_frame(f));
}

void TrustAgent::on_piggyback(NodeId from, std::span<const std::uint8_t> bytes) {
  Frame f;
  try {
    f = decode_frame(bytes);
  } catch (const DecodeError&) {
    ++counters_.ignored_messages;
    return;
  }
  if (type_of(f.body) != MessageType::kCertificateBroadcast || f.auth.sender != from || table_.blacklisted(from) ||
      !verify_fresh(f)) {
    ++counters_.ignored_messages;
    return;
  }
  const auto& sc = std::get<CertificateBroadcast>(f.body).certificate;
  handle_certificate(from, sc, static_cast<int>(sc.cert.flood_hops) - 1);
}

std::set<CertificateId> TrustAgent::cached_ids() const {
  std::set<CertificateId> ids;
  for (const auto& [id, c] : cache_) ids.insert(id);
  return ids;
}

void TrustAgent::seed_certificate(const SignedCertificate& cert) { handle_certificate(self_, cert, -1); }

}  // namespace coopdetect
