#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "coopdetect/trust.hpp"
#include "support.hpp"

using namespace coopdetect;

namespace {

struct OracleResult {
  double t_certificate;
  std::vector<NodeId> majority;
  double alpha1_c;
};

// Enumerates every subset as a candidate "trusting" side, keeps the one that
// matches the threshold rule, and picks the majority from the two sides.
OracleResult oracle(const std::vector<Observation>& obs, double threshold, const std::vector<double>& weight) {
  const std::size_t n = obs.size();
  std::size_t trusting_mask = 0;
  int matches = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in = (mask >> i) & 1;
      const bool trusts = 1.0 - obs[i].maliciousness >= threshold;
      if (in != trusts) ok = false;
    }
    if (ok) {
      trusting_mask = mask;
      ++matches;
    }
  }
  REQUIRE(matches == 1);
  std::vector<std::size_t> sides[2];  // 0: trusting, 1: accusing
  for (std::size_t i = 0; i < n; ++i) sides[((trusting_mask >> i) & 1) ? 0 : 1].push_back(i);
  std::size_t smallest = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (obs[i].responder < obs[smallest].responder) smallest = i;
  int pick;
  if (sides[0].size() != sides[1].size()) {
    pick = sides[0].size() > sides[1].size() ? 0 : 1;
  } else {
    pick = std::find(sides[0].begin(), sides[0].end(), smallest) != sides[0].end() ? 0 : 1;
  }
  OracleResult r;
  double sum = 0.0, weighted = 0.0;
  for (std::size_t i : sides[pick]) {
    sum += obs[i].maliciousness;
    r.majority.push_back(obs[i].responder);
    const double support = pick == 0 ? 1.0 - obs[i].maliciousness : obs[i].maliciousness;
    weighted += weight[obs[i].responder.value] * support;
  }
  std::sort(r.majority.begin(), r.majority.end());
  r.t_certificate = std::clamp(1.0 - sum / static_cast<double>(sides[pick].size()), 0.0, 1.0);
  r.alpha1_c = std::clamp(weighted / static_cast<double>(n), 0.0, 1.0);
  return r;
}

void compare(const std::vector<Observation>& obs, const std::vector<double>& weight) {
  const auto got = compute_group_trust(obs, 0.5, [&](NodeId id) { return weight[id.value]; });
  REQUIRE(got.has_value());
  const auto want = oracle(obs, 0.5, weight);
  REQUIRE(got->majority == want.majority);
  REQUIRE(got->t_certificate == doctest::Approx(want.t_certificate).epsilon(1e-12));
  REQUIRE(got->alpha1_c == doctest::Approx(want.alpha1_c).epsilon(1e-12));
}

}  // namespace

TEST_SUITE("group_trust_oracle") {
  TEST_CASE("two accusers outvote one exonerating responder") {
    const std::vector<Observation> obs{{NodeId{1}, 0.8}, {NodeId{2}, 0.7}, {NodeId{3}, 0.1}};
    const auto g = compute_group_trust(obs, 0.5);
    REQUIRE(g);
    CHECK(g->majority == std::vector<NodeId>{NodeId{1}, NodeId{2}});
    CHECK(g->t_certificate == doctest::Approx(0.25));
  }

  TEST_CASE("unanimous exoneration and singletons") {
    const std::vector<Observation> zero{{NodeId{4}, 0.0}, {NodeId{9}, 0.0}};
    CHECK(compute_group_trust(zero, 0.5)->t_certificate == 1.0);
    const std::vector<Observation> one{{NodeId{4}, 0.35}};
    CHECK(compute_group_trust(one, 0.5)->t_certificate == doctest::Approx(0.65));
    CHECK_FALSE(compute_group_trust(std::vector<Observation>{}, 0.5).has_value());
  }

  TEST_CASE("result does not depend on arrival order") {
    std::vector<Observation> obs{{NodeId{5}, 0.9}, {NodeId{2}, 0.2}, {NodeId{7}, 0.6}, {NodeId{3}, 0.4}};
    const auto a = compute_group_trust(obs, 0.5);
    std::reverse(obs.begin(), obs.end());
    const auto b = compute_group_trust(obs, 0.5);
    CHECK(a->t_certificate == b->t_certificate);
    CHECK(a->majority == b->majority);
  }

  TEST_CASE("exhaustive agreement with the partition enumerator up to four responders") {
    const std::vector<double> weight{0.8, 0.3, 1.0, 0.55, 0.9, 0.1};
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<int> idx(n, 0);
      for (;;) {
        std::vector<Observation> obs;
        for (std::size_t i = 0; i < n; ++i) obs.push_back({NodeId{static_cast<std::uint32_t>(i)}, idx[i] / 10.0});
        compare(obs, weight);
        std::size_t k = 0;
        while (k < n && ++idx[k] == 11) idx[k++] = 0;
        if (k == n) break;
      }
    }
  }

  TEST_CASE("every multiset of five and six grid values under several id assignments") {
    const std::vector<double> weight{0.8, 0.3, 1.0, 0.55, 0.9, 0.1};
    testing::Gen g(31);
    for (std::size_t n : {std::size_t{5}, std::size_t{6}}) {
      std::vector<int> v(n, 0);  // nondecreasing grid indices
      for (;;) {
        std::vector<std::uint32_t> ids(n);
        std::iota(ids.begin(), ids.end(), 0u);
        for (int perm = 0; perm < 3; ++perm) {
          if (perm == 1) std::reverse(ids.begin(), ids.end());
          if (perm == 2)
            for (std::size_t i = n - 1; i > 0; --i) std::swap(ids[i], ids[g.below(i + 1)]);
          std::vector<Observation> obs;
          for (std::size_t i = 0; i < n; ++i) obs.push_back({NodeId{ids[i]}, v[i] / 10.0});
          compare(obs, weight);
        }
        std::size_t k = n;
        while (k > 0 && v[k - 1] == 10) --k;
        if (k == 0) break;
        ++v[k - 1];
        for (std::size_t j = k; j < n; ++j) v[j] = v[k - 1];
      }
    }
  }
}

TEST_SUITE("trust_update") {
  TEST_CASE("worked update") {
    const double beta = certificate_weight(0.8, 0.7, duplicate_factor(1));
    CHECK(beta == doctest::Approx(0.56));
    // Independent evaluation of the recurrence.
    const double distrust = 0.6 * (1 - 0.9) + beta * (1 - 0.25) - 0.01;
    CHECK(distrust == doctest::Approx(0.47));
    CHECK(updated_trust(0.9, 0.25, 0.6, beta, 0.01) == doctest::Approx(1 - distrust));
    CHECK(updated_trust(0.9, 0.25, 0.6, beta, 0.01) == doctest::Approx(0.53));
  }

  TEST_CASE("identity when the old trust carries full weight") {
    testing::Gen g(1);
    for (int i = 0; i < 1000; ++i) {
      const double t = g.unit();
      REQUIRE(updated_trust(t, g.unit(), 1.0, 0.0, 0.0) == doctest::Approx(t).epsilon(1e-15));
    }
  }

  TEST_CASE("bounded without clamping when weights sum to at most one") {
    testing::Gen g(2);
    for (int i = 0; i < 20000; ++i) {
      const double alpha = g.unit();
      const double beta = g.unit() * (1.0 - alpha);
      const double t_old = g.unit(), t_cert = g.unit();
      const double raw = 1.0 - (alpha * (1 - t_old) + beta * (1 - t_cert));
      REQUIRE(raw >= -1e-12);
      REQUIRE(raw <= 1.0 + 1e-12);
      REQUIRE(updated_trust(t_old, t_cert, alpha, beta, 0.0) == doctest::Approx(raw).epsilon(1e-12));
    }
  }

  TEST_CASE("always clamped to the unit interval") {
    testing::Gen g(3);
    for (int i = 0; i < 20000; ++i) {
      const double t = updated_trust(g.unit(), g.unit(), g.between(0, 2), g.between(0, 2), g.between(-1, 1));
      REQUIRE(t >= 0.0);
      REQUIRE(t <= 1.0);
    }
  }

  TEST_CASE("nondecreasing in certificate trust and in old trust") {
    testing::Gen g(4);
    for (int i = 0; i < 20000; ++i) {
      const double alpha = g.unit(), beta = g.unit(), delta = g.between(0, 0.05);
      const double t_old = g.unit(), t_cert = g.unit(), bump = g.unit() * 0.3;
      const double base = updated_trust(t_old, t_cert, alpha, beta, delta);
      REQUIRE(updated_trust(t_old, std::min(1.0, t_cert + bump), alpha, beta, delta) >= base);
      REQUIRE(updated_trust(std::min(1.0, t_old + bump), t_cert, alpha, beta, delta) >= base);
    }
  }

  TEST_CASE("table starts subjects at the initial trust and applies updates") {
    TrustParams p;
    TrustTable t(p);
    CHECK(t.trust(NodeId{3}) == p.initial_trust);
    CHECK(t.status(NodeId{3}) == TrustStatus::kNormal);
    const auto u = t.apply_certificate(NodeId{3}, 0.1, 0.9, {NodeId{1}, NodeId{2}}, 10.0);
    CHECK(u.k == 1);
    CHECK(u.t_new == doctest::Approx(updated_trust(0.8, 0.1, p.alpha, 0.9 * p.alpha2_c, p.delta)));
    CHECK(t.trust(NodeId{3}) == u.t_new);
  }

  TEST_CASE("status follows accusation, trust, surveillance and condemnation") {
    TrustTable t(TrustParams{});
    t.mark_self_accused(NodeId{1}, true);
    CHECK(t.status(NodeId{1}) == TrustStatus::kSuspected);
    t.mark_self_accused(NodeId{1}, false);
    CHECK(t.status(NodeId{1}) == TrustStatus::kNormal);
    t.mark_surveillance(NodeId{1});
    CHECK(t.status(NodeId{1}) == TrustStatus::kSuspected);
    t.mark_condemned(NodeId{1});
    CHECK(t.status(NodeId{1}) == TrustStatus::kMalicious);
    CHECK(t.blacklisted(NodeId{1}));
  }
}

TEST_SUITE("duplicate_suppression") {
  TEST_CASE("a repeat group inside the window changes trust only by the replenishment") {
    TrustParams p;
    TrustTable t(p);
    const std::vector<NodeId> group{NodeId{1}, NodeId{2}, NodeId{4}};
    const auto first = t.apply_certificate(NodeId{9}, 0.2, 0.7, group, 100.0);
    CHECK(first.k == 1);
    const auto second = t.apply_certificate(NodeId{9}, 0.0, 1.0, group, 120.0);
    CHECK(second.k == 2);
    CHECK(second.beta == 0.0);
    CHECK(second.t_new == doctest::Approx(first.t_new + p.delta));
  }

  TEST_CASE("a subset of a recent group counts as the same group") {
    TrustTable t(TrustParams{});
    t.apply_certificate(NodeId{9}, 0.2, 0.7, {NodeId{1}, NodeId{2}, NodeId{4}}, 100.0);
    CHECK(t.group_count(NodeId{9}, std::vector<NodeId>{NodeId{2}, NodeId{4}}, 110.0) == 2);
    CHECK(t.group_count(NodeId{9}, std::vector<NodeId>{NodeId{2}, NodeId{5}}, 110.0) == 1);
  }

  TEST_CASE("groups outside the window no longer suppress") {
    TrustParams p;
    TrustTable t(p);
    const std::vector<NodeId> group{NodeId{1}, NodeId{2}};
    t.apply_certificate(NodeId{9}, 0.2, 0.7, group, 100.0);
    CHECK(t.group_count(NodeId{9}, group, 100.0 + p.duplicate_window + 0.001) == 1);
    const auto late = t.apply_certificate(NodeId{9}, 0.2, 0.7, group, 100.0 + p.duplicate_window + 1.0);
    CHECK(late.k == 1);
    CHECK(late.beta > 0.0);
  }

  TEST_CASE("random interleavings: duplicates never move trust by more than the replenishment") {
    testing::Gen g(6);
    TrustParams p;
    for (int trial = 0; trial < 300; ++trial) {
      TrustTable t(p);
      std::vector<NodeId> group;
      for (std::uint32_t i = 0; i < 6; ++i)
        if (g.unit() < 0.5) group.push_back(NodeId{i});
      if (group.empty()) group.push_back(NodeId{0});
      const SimTime t0 = g.between(0, 500);
      t.apply_certificate(NodeId{20}, g.unit(), g.unit(), group, t0);
      const double before = t.trust(NodeId{20});
      std::vector<NodeId> sub;
      for (NodeId n : group)
        if (g.unit() < 0.7) sub.push_back(n);
      if (sub.empty()) sub.push_back(group.front());
      // Any number of repeats inside the window only replenish.
      double expected = before;
      SimTime at = t0;
      for (std::uint64_t r = 1 + g.below(5); r > 0; --r) {
        at = std::min(at + g.between(0, 10), t0 + 0.999 * p.duplicate_window);
        const auto u = t.apply_certificate(NodeId{20}, g.unit(), g.unit(), sub, at);
        expected = std::min(1.0, expected + p.delta);
        REQUIRE(u.k >= 2);
        REQUIRE(u.beta == 0.0);
        REQUIRE(u.t_new == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("the window is anchored at the last counted certificate") {
    TrustParams p;
    TrustTable t(p);
    const std::vector<NodeId> group{NodeId{1}, NodeId{2}};
    CHECK(t.apply_certificate(NodeId{9}, 0.1, 0.9, group, 100.0).k == 1);
    CHECK(t.apply_certificate(NodeId{9}, 0.1, 0.9, group, 110.0).k == 2);
    CHECK(t.apply_certificate(NodeId{9}, 0.1, 0.9, group, 125.0).k == 3);
    // 35 s after the counted one, although only 10 s after the last repeat.
    const auto again = t.apply_certificate(NodeId{9}, 0.1, 0.9, group, 135.0);
    CHECK(again.k == 1);
    CHECK(again.beta > 0.0);
    CHECK(t.apply_certificate(NodeId{9}, 0.1, 0.9, group, 140.0).k == 2);
  }

  TEST_CASE("a persistent accusing group keeps lowering trust once per window") {
    TrustParams p;
    TrustTable t(p);
    const std::vector<NodeId> group{NodeId{1}, NodeId{2}};
    double lowest = 1.0;
    for (int i = 0; i < 30; ++i) {
      t.apply_certificate(NodeId{9}, 0.05, 0.76, group, 10.0 * i);
      lowest = std::min(lowest, t.trust(NodeId{9}));
    }
    CHECK(lowest < p.blacklist_threshold);
  }
}
