#include "coopdetect/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace coopdetect {

std::string_view to_string(DetectorVariant v) {
  switch (v) {
    case DetectorVariant::kProposed: return "proposed";
    case DetectorVariant::kNaiveWatchdog: return "naive_watchdog";
    case DetectorVariant::kIndividualObservation: return "individual_observation";
  }
  return "?";
}

DetectorVariant parse_variant(std::string_view name) {
  for (DetectorVariant v : all_variants())
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown detector variant: " + std::string(name));
}

std::vector<DetectorVariant> all_variants() {
  return {DetectorVariant::kProposed, DetectorVariant::kNaiveWatchdog, DetectorVariant::kIndividualObservation};
}

namespace {

std::string_view to_string(MobilityModel m) { return m == MobilityModel::kStatic ? "static" : "random_waypoint"; }

std::string_view conduct_name(ProtocolConduct c) {
  switch (c) {
    case ProtocolConduct::kCooperate: return "cooperate";
    case ProtocolConduct::kSilent: return "silent";
    case ProtocolConduct::kOmitAccusations: return "omit_accusations";
  }
  return "?";
}

void check(std::vector<std::string>& out, bool ok, std::string message) {
  if (!ok) out.push_back(std::move(message));
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> e;
  check(e, world.width > 0 && world.height > 0, "world.width and world.height must be positive");
  check(e, world.duration > 0, "world.duration must be positive");
  check(e, world.nodes >= 2, "world.nodes must be at least 2");
  check(e, world.range > 0, "world.range must be positive");
  check(e, mobility.min_speed >= 0 && mobility.max_speed > mobility.min_speed,
        "mobility speeds must satisfy 0 <= min_speed < max_speed");
  check(e, mobility.pause >= 0, "mobility.pause must be non-negative");
  check(e, traffic.rate > 0, "traffic.rate must be positive");
  check(e, traffic.payload > 0, "traffic.payload must be positive");
  check(e, probability(adversaries.drop_probability_min) && probability(adversaries.drop_probability_max) &&
               adversaries.drop_probability_min <= adversaries.drop_probability_max,
        "adversaries drop probabilities must satisfy 0 <= min <= max <= 1");
  check(e, probability(adversaries.modify_probability), "adversaries.modify_probability must be in [0, 1]");
  check(e, adversaries.drop_probability_max + adversaries.modify_probability <= 1.0 + 1e-12,
        "adversaries drop_probability_max + modify_probability must not exceed 1");

  const std::uint32_t n = world.nodes;
  const bool explicit_adv = !layout.adversaries.empty();
  const bool explicit_flows = !layout.flows.empty();
  if (!explicit_adv) {
    const std::uint64_t reserved = std::uint64_t{adversaries.count} + adversaries.false_accusers;
    check(e, reserved + 2 <= n, "adversaries.count + adversaries.false_accusers must leave at least 2 honest nodes");
  }
  if (!explicit_flows)
    check(e, traffic.flows == 0 || n >= 2, "traffic.flows needs at least 2 honest nodes");

  if (!layout.positions.empty()) {
    check(e, layout.positions.size() == n, "layout.positions must list exactly world.nodes positions");
    for (const auto& p : layout.positions)
      if (p.x < 0 || p.y < 0 || p.x > world.width || p.y > world.height) {
        e.push_back("layout.positions must lie inside the world");
        break;
      }
  }
  for (const auto& [s, d] : layout.flows)
    if (s >= n || d >= n || s == d) {
      e.push_back("layout.flows entries must be distinct node ids below world.nodes");
      break;
    }
  for (const auto* list : {&layout.adversaries, &layout.false_accusers}) {
    std::set<std::uint32_t> ids(list->begin(), list->end());
    if (ids.size() != list->size() || (!ids.empty() && *ids.rbegin() >= n)) {
      e.push_back("layout adversary lists must hold distinct node ids below world.nodes");
      break;
    }
  }

  check(e, network.queue_capacity >= 1, "network.queue_capacity must be at least 1");
  check(e, network.link_rate_bps > 0, "network.link_rate must be positive");
  check(e, probability(network.p_col_given_overlap), "network.p_col must be in [0, 1]");
  check(e, network.control_latency >= 0, "network.control_latency must be non-negative");
  check(e, network.route_retry_interval > 0, "network.route_retry must be positive");
  check(e, network.route_hold_timeout > 0, "network.route_hold must be positive");

  check(e, probability(monitor.p1) && probability(monitor.p2), "monitor.p1 and monitor.p2 must be in [0, 1]");
  check(e, monitor.forward_timeout > 0, "monitor.forward_timeout must be positive");
  check(e, probability(monitor.suspicion_threshold), "monitor.suspicion_threshold must be in [0, 1]");
  check(e, monitor.alpha1_s >= 0 && monitor.alpha2_s >= 0 && monitor.alpha1_s + monitor.alpha2_s <= 1.0 + 1e-12,
        "monitor.alpha1 and monitor.alpha2 must be non-negative with sum at most 1");
  check(e, monitor.lambda_f > 0, "monitor.lambda must be positive");
  check(e, monitor.d_cap > 0, "monitor.d_cap must be positive");
  check(e, monitor.stats_window > 0, "monitor.stats_window must be positive");
  check(e, probability(monitor.p_timeout), "monitor.p_timeout must be in [0, 1]");

  check(e, probability(trust.alpha) && probability(trust.alpha2_c), "trust.alpha and trust.alpha2 must be in [0, 1]");
  check(e, trust.delta >= 0 && trust.delta <= 1, "trust.delta must be in [0, 1]");
  check(e, probability(trust.trust_threshold) && probability(trust.blacklist_threshold) &&
               trust.blacklist_threshold <= trust.trust_threshold,
        "trust thresholds must satisfy 0 <= blacklist_threshold <= trust_threshold <= 1");
  check(e, probability(trust.initial_trust), "trust.initial_trust must be in [0, 1]");
  check(e, trust.duplicate_window >= 0, "trust.duplicate_window must be non-negative");
  check(e, trust.vote_interaction_window >= 0, "trust.vote_interaction_window must be non-negative");
  check(e, trust.vote_duration > 0, "trust.vote_duration must be positive");
  check(e, trust.exchange_period >= 0, "trust.exchange_period must be non-negative");
  check(e, trust.flood_hops_min >= 1 && trust.flood_hops_min <= 255, "trust.flood_hops_min must be in [1, 255]");
  check(e, trust.certificate_lifetime > 0, "trust.certificate_lifetime must be positive");
  check(e, trust.challenge_timeout > 0 && trust.collection_timeout > 0 &&
               trust.collection_timeout < trust.challenge_timeout,
        "trust timeouts must satisfy 0 < collection_timeout < challenge_timeout");
  check(e, trust.silent_rounds_for_alarm >= 1, "trust.silent_rounds must be at least 1");
  check(e, freshness_window > trust.collection_timeout, "auth.freshness_window must exceed trust.collection_timeout");
  return e;
}

ScenarioConfig table1_preset() {
  ScenarioConfig c;
  c.adversaries.drop_probability_min = 0.5;
  c.adversaries.drop_probability_max = 1.0;
  return c;
}

namespace {

// Emitter --------------------------------------------------------------------

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  return s;
}

class Emitter {
 public:
  void section(std::string_view name) { out_ << name << ":\n"; }
  void key(std::string_view name, std::string_view value, int indent = 1) {
    out_ << std::string(2 * indent, ' ') << name << ": " << value << '\n';
  }
  void num(std::string_view name, double v, int indent = 1) { key(name, number(v), indent); }
  void integer(std::string_view name, std::uint64_t v, int indent = 1) { key(name, std::to_string(v), indent); }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

template <typename T>
std::string flow_list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

// Reader ---------------------------------------------------------------------

class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  void keys(const YAML::Node& map, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!map.IsMap()) {
      problems_.push_back(std::string(where) + " must be a mapping");
      return;
    }
    for (const auto& kv : map) {
      const auto k = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == k;
      if (!ok) problems_.push_back("unknown key " + std::string(where.empty() ? "" : std::string(where) + ".") + k);
    }
  }

  template <typename T>
  void get(const YAML::Node& map, std::string_view where, const char* key, T& out) {
    const YAML::Node n = map[key];
    if (!n) return;
    try {
      if constexpr (std::is_unsigned_v<T>) {
        const auto s = n.as<std::string>();
        if (!s.empty() && s[0] == '-') throw YAML::Exception(n.Mark(), "negative");
      }
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      problems_.push_back(std::string(where) + "." + key + " has the wrong type");
    }
  }

 private:
  std::vector<std::string>& problems_;
};

}  // namespace

std::string serialize_config(const ScenarioConfig& c) {
  Emitter e;
  e.key("seed", std::to_string(c.seed), 0);
  e.key("variant", to_string(c.variant), 0);
  e.section("world");
  e.num("width", c.world.width);
  e.num("height", c.world.height);
  e.num("duration", c.world.duration);
  e.integer("nodes", c.world.nodes);
  e.num("range", c.world.range);
  e.section("mobility");
  e.key("model", to_string(c.mobility.model));
  e.num("min_speed", c.mobility.min_speed);
  e.num("max_speed", c.mobility.max_speed);
  e.num("pause", c.mobility.pause);
  e.section("traffic");
  e.integer("flows", c.traffic.flows);
  e.num("rate", c.traffic.rate);
  e.integer("payload", c.traffic.payload);
  e.section("adversaries");
  e.integer("count", c.adversaries.count);
  e.num("drop_probability_min", c.adversaries.drop_probability_min);
  e.num("drop_probability_max", c.adversaries.drop_probability_max);
  e.num("modify_probability", c.adversaries.modify_probability);
  e.key("conduct", conduct_name(c.adversaries.conduct));
  e.integer("false_accusers", c.adversaries.false_accusers);
  e.section("network");
  e.integer("queue_capacity", c.network.queue_capacity);
  e.num("link_rate", c.network.link_rate_bps);
  e.integer("header_bytes", c.network.header_bytes);
  e.num("p_col", c.network.p_col_given_overlap);
  e.num("control_latency", c.network.control_latency);
  e.num("route_retry", c.network.route_retry_interval);
  e.num("route_hold", c.network.route_hold_timeout);
  e.section("monitor");
  e.num("p1", c.monitor.p1);
  e.num("p2", c.monitor.p2);
  e.num("forward_timeout", c.monitor.forward_timeout);
  e.num("suspicion_threshold", c.monitor.suspicion_threshold);
  e.num("alpha1", c.monitor.alpha1_s);
  e.num("alpha2", c.monitor.alpha2_s);
  e.num("lambda", c.monitor.lambda_f);
  e.num("d_cap", c.monitor.d_cap);
  e.num("stats_window", c.monitor.stats_window);
  e.num("p_timeout", c.monitor.p_timeout);
  e.section("trust");
  e.num("alpha", c.trust.alpha);
  e.num("delta", c.trust.delta);
  e.num("alpha2", c.trust.alpha2_c);
  e.num("trust_threshold", c.trust.trust_threshold);
  e.num("blacklist_threshold", c.trust.blacklist_threshold);
  e.num("initial_trust", c.trust.initial_trust);
  e.num("duplicate_window", c.trust.duplicate_window);
  e.num("vote_interaction_window", c.trust.vote_interaction_window);
  e.num("vote_duration", c.trust.vote_duration);
  e.num("exchange_period", c.trust.exchange_period);
  e.integer("flood_hops_min", static_cast<std::uint64_t>(c.trust.flood_hops_min));
  e.num("certificate_lifetime", c.trust.certificate_lifetime);
  e.num("challenge_timeout", c.trust.challenge_timeout);
  e.num("collection_timeout", c.trust.collection_timeout);
  e.integer("silent_rounds", static_cast<std::uint64_t>(c.trust.silent_rounds_for_alarm));
  e.section("auth");
  e.num("freshness_window", c.freshness_window);
  if (!c.layout.empty()) {
    e.section("layout");
    if (!c.layout.positions.empty()) {
      std::string s = "[";
      for (std::size_t i = 0; i < c.layout.positions.size(); ++i) {
        if (i) s += ", ";
        s += "[" + number(c.layout.positions[i].x) + ", " + number(c.layout.positions[i].y) + "]";
      }
      e.key("positions", s + "]");
    }
    if (!c.layout.flows.empty()) {
      std::string s = "[";
      for (std::size_t i = 0; i < c.layout.flows.size(); ++i) {
        if (i) s += ", ";
        s += "[" + std::to_string(c.layout.flows[i].first) + ", " + std::to_string(c.layout.flows[i].second) + "]";
      }
      e.key("flows", s + "]");
    }
    if (!c.layout.adversaries.empty()) e.key("adversaries", flow_list(c.layout.adversaries));
    if (!c.layout.false_accusers.empty()) e.key("false_accusers", flow_list(c.layout.false_accusers));
  }
  return e.str();
}

ScenarioConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& ex) {
    throw ConfigError("config is not well formed", {ex.what()});
  }
  ScenarioConfig c = table1_preset();
  std::vector<std::string> problems;
  if (root.IsNull()) return c;
  Reader r(problems);
  r.keys(root, "", {"seed", "variant", "world", "mobility", "traffic", "adversaries", "network", "monitor", "trust",
                    "auth", "layout"});
  if (!root.IsMap()) throw ConfigError("invalid config", problems);

  r.get(root, "", "seed", c.seed);
  if (root["variant"]) {
    try {
      c.variant = parse_variant(root["variant"].as<std::string>());
    } catch (const std::exception& ex) {
      problems.push_back(ex.what());
    }
  }
  if (auto n = root["world"]) {
    r.keys(n, "world", {"width", "height", "duration", "nodes", "range"});
    r.get(n, "world", "width", c.world.width);
    r.get(n, "world", "height", c.world.height);
    r.get(n, "world", "duration", c.world.duration);
    r.get(n, "world", "nodes", c.world.nodes);
    r.get(n, "world", "range", c.world.range);
  }
  if (auto n = root["mobility"]) {
    r.keys(n, "mobility", {"model", "min_speed", "max_speed", "pause"});
    if (n["model"]) {
      const auto m = n["model"].as<std::string>();
      if (m == "random_waypoint")
        c.mobility.model = MobilityModel::kRandomWaypoint;
      else if (m == "static")
        c.mobility.model = MobilityModel::kStatic;
      else
        problems.push_back("mobility.model must be random_waypoint or static");
    }
    r.get(n, "mobility", "min_speed", c.mobility.min_speed);
    r.get(n, "mobility", "max_speed", c.mobility.max_speed);
    r.get(n, "mobility", "pause", c.mobility.pause);
  }
  if (auto n = root["traffic"]) {
    r.keys(n, "traffic", {"flows", "rate", "payload"});
    r.get(n, "traffic", "flows", c.traffic.flows);
    r.get(n, "traffic", "rate", c.traffic.rate);
    r.get(n, "traffic", "payload", c.traffic.payload);
  }
  if (auto n = root["adversaries"]) {
    r.keys(n, "adversaries", {"count", "drop_probability_min", "drop_probability_max", "modify_probability", "conduct",
                              "false_accusers"});
    r.get(n, "adversaries", "count", c.adversaries.count);
    r.get(n, "adversaries", "drop_probability_min", c.adversaries.drop_probability_min);
    r.get(n, "adversaries", "drop_probability_max", c.adversaries.drop_probability_max);
    r.get(n, "adversaries", "modify_probability", c.adversaries.modify_probability);
    r.get(n, "adversaries", "false_accusers", c.adversaries.false_accusers);
    if (n["conduct"]) {
      const auto s = n["conduct"].as<std::string>();
      bool found = false;
      for (auto k : {ProtocolConduct::kCooperate, ProtocolConduct::kSilent, ProtocolConduct::kOmitAccusations})
        if (conduct_name(k) == s) {
          c.adversaries.conduct = k;
          found = true;
        }
      if (!found) problems.push_back("adversaries.conduct must be cooperate, silent or omit_accusations");
    }
  }
  if (auto n = root["network"]) {
    r.keys(n, "network", {"queue_capacity", "link_rate", "header_bytes", "p_col", "control_latency", "route_retry",
                          "route_hold"});
    r.get(n, "network", "queue_capacity", c.network.queue_capacity);
    r.get(n, "network", "link_rate", c.network.link_rate_bps);
    r.get(n, "network", "header_bytes", c.network.header_bytes);
    r.get(n, "network", "p_col", c.network.p_col_given_overlap);
    r.get(n, "network", "control_latency", c.network.control_latency);
    r.get(n, "network", "route_retry", c.network.route_retry_interval);
    r.get(n, "network", "route_hold", c.network.route_hold_timeout);
  }
  if (auto n = root["monitor"]) {
    r.keys(n, "monitor", {"p1", "p2", "forward_timeout", "suspicion_threshold", "alpha1", "alpha2", "lambda", "d_cap",
                          "stats_window", "p_timeout"});
    r.get(n, "monitor", "p1", c.monitor.p1);
    r.get(n, "monitor", "p2", c.monitor.p2);
    r.get(n, "monitor", "forward_timeout", c.monitor.forward_timeout);
    r.get(n, "monitor", "suspicion_threshold", c.monitor.suspicion_threshold);
    r.get(n, "monitor", "alpha1", c.monitor.alpha1_s);
    r.get(n, "monitor", "alpha2", c.monitor.alpha2_s);
    r.get(n, "monitor", "lambda", c.monitor.lambda_f);
    r.get(n, "monitor", "d_cap", c.monitor.d_cap);
    r.get(n, "monitor", "stats_window", c.monitor.stats_window);
    r.get(n, "monitor", "p_timeout", c.monitor.p_timeout);
  }
  if (auto n = root["trust"]) {
    r.keys(n, "trust", {"alpha", "delta", "alpha2", "trust_threshold", "blacklist_threshold", "initial_trust",
                        "duplicate_window", "vote_interaction_window", "vote_duration", "exchange_period",
                        "flood_hops_min", "certificate_lifetime", "challenge_timeout", "collection_timeout",
                        "silent_rounds"});
    r.get(n, "trust", "alpha", c.trust.alpha);
    r.get(n, "trust", "delta", c.trust.delta);
    r.get(n, "trust", "alpha2", c.trust.alpha2_c);
    r.get(n, "trust", "trust_threshold", c.trust.trust_threshold);
    r.get(n, "trust", "blacklist_threshold", c.trust.blacklist_threshold);
    r.get(n, "trust", "initial_trust", c.trust.initial_trust);
    r.get(n, "trust", "duplicate_window", c.trust.duplicate_window);
    r.get(n, "trust", "vote_interaction_window", c.trust.vote_interaction_window);
    r.get(n, "trust", "vote_duration", c.trust.vote_duration);
    r.get(n, "trust", "exchange_period", c.trust.exchange_period);
    r.get(n, "trust", "flood_hops_min", c.trust.flood_hops_min);
    r.get(n, "trust", "certificate_lifetime", c.trust.certificate_lifetime);
    r.get(n, "trust", "challenge_timeout", c.trust.challenge_timeout);
    r.get(n, "trust", "collection_timeout", c.trust.collection_timeout);
    r.get(n, "trust", "silent_rounds", c.trust.silent_rounds_for_alarm);
  }
  if (auto n = root["auth"]) {
    r.keys(n, "auth", {"freshness_window"});
    r.get(n, "auth", "freshness_window", c.freshness_window);
  }
  if (auto n = root["layout"]) {
    r.keys(n, "layout", {"positions", "flows", "adversaries", "false_accusers"});
    try {
      if (n["positions"])
        for (const auto& p : n["positions"]) {
          if (!p.IsSequence() || p.size() != 2) throw YAML::Exception(p.Mark(), "position");
          c.layout.positions.push_back({p[0].as<double>(), p[1].as<double>()});
        }
      if (n["flows"])
        for (const auto& f : n["flows"]) {
          if (!f.IsSequence() || f.size() != 2) throw YAML::Exception(f.Mark(), "flow");
          c.layout.flows.emplace_back(f[0].as<std::uint32_t>(), f[1].as<std::uint32_t>());
        }
      if (n["adversaries"]) c.layout.adversaries = n["adversaries"].as<std::vector<std::uint32_t>>();
      if (n["false_accusers"]) c.layout.false_accusers = n["false_accusers"].as<std::vector<std::uint32_t>>();
    } catch (const YAML::Exception&) {
      problems.push_back("layout lists are malformed");
    }
  }
  if (problems.empty()) problems = c.validate();
  if (!problems.empty()) throw ConfigError("invalid config", problems);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config", {path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace coopdetect
