#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "coopdetect/types.hpp"

namespace coopdetect {

struct TrustParams {
  double alpha = 0.6;      // weight of the previous distrust
  double delta = 0.01;     // replenishment per accepted update
  double alpha2_c = 0.7;   // weight given to the newly computed trust
  double trust_threshold = 0.5;
  double blacklist_threshold = 0.3;
  SimTime duplicate_window = 30.0;
  double initial_trust = 0.8;
  SimTime vote_interaction_window = 100.0;
  SimTime vote_duration = 5.0;
  SimTime exchange_period = 20.0;
  int flood_hops_min = 2;
  SimTime certificate_lifetime = 300.0;
  SimTime challenge_timeout = 3.0;
  SimTime collection_timeout = 1.0;
  int silent_rounds_for_alarm = 3;
};

/// One neighbor's reported degree of maliciousness for the accused.
struct Observation {
  NodeId responder;
  double maliciousness = 0.0;
};

struct GroupTrust {
  double t_certificate = 1.0;
  std::vector<NodeId> majority;  // ascending
  double alpha1_c = 0.0;
};

/// Partitions responders at `trust_threshold` on t_i = 1 - maliciousness_i,
/// takes the larger side (ties go to the side holding the smallest responder
/// id) and returns 1 - mean maliciousness of that side. `weight_of` supplies
/// w_i for alpha1_c; responders default to weight 1. Returns nullopt for an
/// empty response set. Observations are processed in ascending responder
/// order so the result is independent of arrival order.
std::optional<GroupTrust> compute_group_trust(std::span<const Observation> responses, double trust_threshold,
                                              const std::function<double(NodeId)>& weight_of = {});

/// 1 when this is the first certificate from the responder group inside the window, else 0.
inline double duplicate_factor(int k) { return k == 1 ? 1.0 : 0.0; }

/// (1 - T_new) = alpha (1 - T_old) + beta (1 - T_cert) - delta, clamped to [0, 1].
double updated_trust(double t_old, double t_certificate, double alpha, double beta, double delta);

/// beta = alpha1 * alpha2 * alpha3.
inline double certificate_weight(double alpha1_c, double alpha2_c, double alpha3) { return alpha1_c * alpha2_c * alpha3; }

enum class TrustStatus { kNormal, kSuspected, kMalicious };

/// A node's view of one subject.
struct SubjectTrust {
  double t = 0.8;
  bool self_accused = false;  // this node's monitor triggered on the subject
  bool surveillance = false;  // a vote kept the subject under surveillance
  bool condemned = false;     // a vote condemned the subject
  bool alarm_raised = false;
  struct GroupRecord {
    std::vector<NodeId> responders;  // ascending
    SimTime issued_at;
    bool counted;  // k was 1 when applied
  };
  std::deque<GroupRecord> recent_groups;
};

/// Node-local global trust state and blacklist.
class TrustTable {
 public:
  explicit TrustTable(TrustParams params) : params_(params) {}

  double trust(NodeId subject) const;
  TrustStatus status(NodeId subject) const;
  bool blacklisted(NodeId subject) const { return status(subject) == TrustStatus::kMalicious; }

  /// k = 1 + certificates whose responder set equals or contains
  /// `responders`, counted from the latest such certificate that had k = 1
  /// and lies within the duplicate window of `issued_at`. 1 when none does.
  int group_count(NodeId subject, std::span<const NodeId> responders, SimTime issued_at) const;

  struct Update {
    double t_old;
    double t_new;
    int k;
    double beta;
  };
  /// Applies one accepted certificate and records its responder group. With
  /// k > 1 only the replenishment delta is applied.
  Update apply_certificate(NodeId subject, double t_certificate, double alpha1_c, std::vector<NodeId> responders,
                           SimTime issued_at);

  void mark_self_accused(NodeId subject, bool on);
  void mark_condemned(NodeId subject);
  void mark_surveillance(NodeId subject);
  bool alarm_raised(NodeId subject) const;
  void mark_alarm_raised(NodeId subject);

  const std::map<NodeId, SubjectTrust>& subjects() const { return subjects_; }
  const TrustParams& params() const { return params_; }

 private:
  SubjectTrust& entry(NodeId subject);

  TrustParams params_;
  std::map<NodeId, SubjectTrust> subjects_;
};

}  // namespace coopdetect
