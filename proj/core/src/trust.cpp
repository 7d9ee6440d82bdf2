#include "coopdetect/trust.hpp"

#include <algorithm>
#include <cmath>

namespace coopdetect {

std::optional<GroupTrust> compute_group_trust(std::span<const Observation> responses, double trust_threshold,
                                              const std::function<double(NodeId)>& weight_of) {
  if (responses.empty()) return std::nullopt;
  std::vector<Observation> sorted(responses.begin(), responses.end());
  std::sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) {
    if (a.responder != b.responder) return a.responder < b.responder;
    return a.maliciousness < b.maliciousness;
  });

  std::vector<const Observation*> trusting;
  std::vector<const Observation*> accusing;
  for (const auto& o : sorted) (1.0 - o.maliciousness >= trust_threshold ? trusting : accusing).push_back(&o);

  bool pick_trusting;
  if (trusting.size() != accusing.size()) {
    pick_trusting = trusting.size() > accusing.size();
  } else {
    // Equal halves: the side holding the smallest responder id wins.
    pick_trusting = sorted.front().responder == trusting.front()->responder;
  }
  const auto& side = pick_trusting ? trusting : accusing;

  double sum_m = 0.0;
  for (const Observation* o : side) sum_m += o->maliciousness;
  const double mean_m = sum_m / static_cast<double>(side.size());

  GroupTrust g;
  g.t_certificate = std::clamp(1.0 - mean_m, 0.0, 1.0);
  g.majority.reserve(side.size());
  double weighted = 0.0;
  for (const Observation* o : side) {
    g.majority.push_back(o->responder);
    const double w = weight_of ? weight_of(o->responder) : 1.0;
    // Strength of this responder's support for the majority's verdict.
    const double support = pick_trusting ? 1.0 - o->maliciousness : o->maliciousness;
    weighted += w * std::clamp(support, 0.0, 1.0);
  }
  g.alpha1_c = std::clamp(weighted / static_cast<double>(sorted.size()), 0.0, 1.0);
  return g;
}

double updated_trust(double t_old, double t_certificate, double alpha, double beta, double delta) {
  const double distrust = alpha * (1.0 - t_old) + beta * (1.0 - t_certificate) - delta;
  return std::clamp(1.0 - distrust, 0.0, 1.0);
}

SubjectTrust& TrustTable::entry(NodeId subject) {
  auto [it, inserted] = subjects_.try_emplace(subject);
  if (inserted) it->second.t = params_.initial_trust;
  return it->second;
}

double TrustTable::trust(NodeId subject) const {
  auto it = subjects_.find(subject);
  return it == subjects_.end() ? params_.initial_trust : it->second.t;
}

TrustStatus TrustTable::status(NodeId subject) const {
  auto it = subjects_.find(subject);
  if (it == subjects_.end()) return TrustStatus::kNormal;
  const SubjectTrust& s = it->second;
  if (s.condemned) return TrustStatus::kMalicious;
  if (s.surveillance || s.self_accused || s.t < params_.trust_threshold) return TrustStatus::kSuspected;
  return TrustStatus::kNormal;
}

int TrustTable::group_count(NodeId subject, std::span<const NodeId> responders, SimTime issued_at) const {
  auto it = subjects_.find(subject);
  if (it == subjects_.end()) return 1;
  const auto& groups = it->second.recent_groups;
  auto covers = [&](const SubjectTrust::GroupRecord& g) {
    return std::abs(g.issued_at - issued_at) <= params_.duplicate_window &&
           std::includes(g.responders.begin(), g.responders.end(), responders.begin(), responders.end());
  };
  // The window runs from the latest counted certificate of the group.
  const SubjectTrust::GroupRecord* anchor = nullptr;
  for (const auto& g : groups)
    if (g.counted && covers(g) && (anchor == nullptr || g.issued_at >= anchor->issued_at)) anchor = &g;
  if (anchor == nullptr) return 1;
  int k = 1;
  for (const auto& g : groups)
    if (g.issued_at >= anchor->issued_at && covers(g)) ++k;
  return k;
}

TrustTable::Update TrustTable::apply_certificate(NodeId subject, double t_certificate, double alpha1_c,
                                                 std::vector<NodeId> responders, SimTime issued_at) {
  std::sort(responders.begin(), responders.end());
  const int k = group_count(subject, responders, issued_at);
  SubjectTrust& s = entry(subject);
  const double beta = certificate_weight(alpha1_c, params_.alpha2_c, duplicate_factor(k));
  const double t_old = s.t;
  // A repeat group only replenishes.
  s.t = k == 1 ? updated_trust(t_old, t_certificate, params_.alpha, beta, params_.delta)
               : std::clamp(t_old + params_.delta, 0.0, 1.0);
  s.recent_groups.push_back({std::move(responders), issued_at, k == 1});
  while (!s.recent_groups.empty() && issued_at - s.recent_groups.front().issued_at > params_.duplicate_window)
    s.recent_groups.pop_front();
  return Update{t_old, s.t, k, beta};
}

void TrustTable::mark_self_accused(NodeId subject, bool on) { entry(subject).self_accused = on; }
void TrustTable::mark_condemned(NodeId subject) { entry(subject).condemned = true; }
void TrustTable::mark_surveillance(NodeId subject) { entry(subject).surveillance = true; }
bool TrustTable::alarm_raised(NodeId subject) const {
  auto it = subjects_.find(subject);
  return it != subjects_.end() && it->second.alarm_raised;
}
void TrustTable::mark_alarm_raised(NodeId subject) { entry(subject).alarm_raised = true; }

}  // namespace coopdetect
