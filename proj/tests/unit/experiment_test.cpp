#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "coopdetect/experiment.hpp"
#include "support.hpp"

using namespace coopdetect;

namespace {

// Small enough to run in well under a second per seed.
ScenarioConfig small() {
  ScenarioConfig c = table1_preset();
  c.world.nodes = 30;
  c.world.width = c.world.height = 300.0;
  c.world.duration = 150.0;
  c.traffic.flows = 4;
  c.adversaries.count = 3;
  c.adversaries.drop_probability_min = 0.5;
  return c;
}

std::string matrix_csv(const MatrixResult& m) {
  std::ostringstream out;
  write_matrix_csv(out, m);
  return out.str();
}

std::string trace_of(ScenarioConfig c) {
  std::ostringstream out;
  TraceSink sink(out);
  run_scenario(c, &sink);
  return out.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Splits one RFC 4180 record; quoted fields may hold commas and doubled quotes.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

// Five relays in a line plus one bystander that hears the middle relay.
ScenarioConfig line_with_dropper() {
  ScenarioConfig c = table1_preset();
  c.world.nodes = 6;
  c.world.width = c.world.height = 200.0;
  c.world.duration = 300.0;
  c.mobility.model = MobilityModel::kStatic;
  c.layout.positions = {{10, 10}, {50, 10}, {90, 10}, {130, 10}, {170, 10}, {90, 40}};
  c.layout.flows = {{0, 4}};
  c.layout.adversaries = {2};
  c.adversaries.drop_probability_min = c.adversaries.drop_probability_max = 1.0;
  return c;
}

}  // namespace

TEST_SUITE("determinism") {
  TEST_CASE("the same matrix yields identical bytes") {
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    const auto a = matrix_csv(run_matrix(small(), all_variants(), seeds, 1));
    const auto b = matrix_csv(run_matrix(small(), all_variants(), seeds, 1));
    CHECK(a == b);
  }

  TEST_CASE("worker count does not change results") {
    const std::vector<std::uint64_t> seeds{5, 6, 7};
    CHECK(matrix_csv(run_matrix(small(), all_variants(), seeds, 1)) ==
          matrix_csv(run_matrix(small(), all_variants(), seeds, 3)));
  }

  TEST_CASE("traces repeat exactly and differ across seeds") {
    ScenarioConfig c = small();
    c.seed = 11;
    const std::string t1 = trace_of(c), t2 = trace_of(c);
    CHECK(t1 == t2);
    c.seed = 12;
    CHECK(trace_of(c) != t1);
  }

  TEST_CASE("a run does not depend on the runs before it") {
    ScenarioConfig c = small();
    c.seed = 3;
    const auto alone = run_matrix(c, {DetectorVariant::kProposed}, {3}, 1);
    const auto after = run_matrix(c, {DetectorVariant::kProposed}, {1, 2, 3}, 1);
    std::ostringstream x, y;
    write_runs_csv(x, alone.runs);
    write_runs_csv(y, {after.runs.back()});
    CHECK(x.str() == y.str());
  }
}

TEST_SUITE("experiment") {
  TEST_CASE("csv fields are quoted only when needed") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("") == "");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_field("cr\r") == "\"cr\r\"");
    testing::Gen g(9);
    const std::string alphabet = "ab,\"\r\n x";
    for (int i = 0; i < 500; ++i) {
      std::string s;
      for (std::uint64_t k = g.below(12); k > 0; --k) s += alphabet[g.below(alphabet.size())];
      const auto fields = split_record(csv_field(s) + "," + csv_field(s));
      REQUIRE(fields.size() == 2);
      CHECK(fields[0] == s);
      CHECK(fields[1] == s);
    }
  }

  TEST_CASE("numbers print in shortest round-trip form") {
    testing::Gen g(10);
    for (int i = 0; i < 2000; ++i) {
      const double v = g.between(-1e6, 1e6) / (1 + g.below(1000));
      const std::string s = format_number(v);
      double back = 0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      REQUIRE(back == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(3.0) == "3");
  }

  TEST_CASE("matrix csv has one row per run plus one summary per variant") {
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    ScenarioConfig c = small();
    c.world.duration = 60.0;
    const auto m = run_matrix(c, {DetectorVariant::kProposed, DetectorVariant::kNaiveWatchdog}, seeds, 2);
    CHECK(m.runs.size() == 20);
    REQUIRE(m.summaries.size() == 2);
    CHECK(m.summaries[0].runs == 10);
    CHECK(m.runs[0].variant == DetectorVariant::kProposed);
    CHECK(m.runs[10].variant == DetectorVariant::kNaiveWatchdog);
    CHECK(m.runs[3].seed == 4);
    const std::string csv = matrix_csv(m);
    CHECK(count_lines(csv) == 1 + 20 + 2);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    const std::size_t columns = split_record(line).size();
    std::size_t n = 0;
    while (std::getline(in, line)) {
      REQUIRE(line.back() == '\r');
      line.pop_back();
      CHECK(split_record(line).size() == columns);
      ++n;
    }
    CHECK(n == 22);

    double mean = 0;
    for (std::size_t i = 0; i < 10; ++i) mean += m.runs[i].false_alarm_rate;
    CHECK(m.summaries[0].false_alarm_rate.mean == doctest::Approx(mean / 10));
  }

  TEST_CASE("empty seed or variant lists are rejected") {
    CHECK_THROWS_AS(run_matrix(small(), all_variants(), {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_matrix(small(), {}, {1}, 1), std::invalid_argument);
  }

  TEST_CASE("baseline variants send no control traffic") {
    for (DetectorVariant v : {DetectorVariant::kNaiveWatchdog, DetectorVariant::kIndividualObservation}) {
      ScenarioConfig c = small();
      c.variant = v;
      std::ostringstream out;
      TraceSink sink(out);
      const RunMetrics r = run_scenario(c, &sink);
      CHECK(r.control_messages == 0);
      CHECK(r.challenges == 0);
      CHECK(r.certificates == 0);
      std::istringstream in(out.str());
      std::string line;
      while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        if (!j.contains("ev")) continue;
        const std::string ev = j["ev"];
        CHECK(ev != "challenge");
        CHECK(ev != "certificate");
        CHECK(ev != "trust_update");
        CHECK(ev != "alarm");
      }
    }
  }

  TEST_CASE("metrics stay in range and fates are conserved") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      for (DetectorVariant v : all_variants()) {
        ScenarioConfig c = small();
        c.seed = seed;
        c.variant = v;
        const RunMetrics r = run_scenario(c);
        CAPTURE(seed);
        CHECK(r.false_alarm_rate >= 0.0);
        CHECK(r.false_alarm_rate <= 1.0);
        CHECK(r.detection_rate >= 0.0);
        CHECK(r.detection_rate <= 1.0);
        CHECK(r.honest_flagged <= r.honest_on_path);
        CHECK(r.malicious_flagged <= r.malicious_on_path);
        CHECK(r.delivered + r.malicious_drops + r.congestion_drops + r.collision_losses + r.modified +
                  r.route_expired + r.in_flight ==
              r.originated);
        CHECK(r.nodes.size() == c.world.nodes);
        std::uint32_t bad = 0;
        for (const auto& n : r.nodes) {
          CHECK(n.complaints < c.world.nodes);
          CHECK(n.max_suspicion <= 1.0);
          if (n.malicious) ++bad;
        }
        CHECK(bad == c.adversaries.count);
      }
    }
  }

  TEST_CASE("no adversaries means full detection and no malicious drops") {
    ScenarioConfig c = small();
    c.adversaries.count = 0;
    const RunMetrics r = run_scenario(c);
    CHECK(r.detection_rate == 1.0);
    CHECK(r.malicious_on_path == 0);
    CHECK(r.malicious_drops == 0);
  }

  TEST_CASE("census orders by complaints then node id") {
    ScenarioConfig c = small();
    c.seed = 4;
    const RunMetrics r = run_scenario(c);
    const auto rows = complaint_census(r);
    REQUIRE(rows.size() == r.nodes.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const bool ordered = rows[i - 1].complaints > rows[i].complaints ||
                           (rows[i - 1].complaints == rows[i].complaints && rows[i - 1].node < rows[i].node);
      CHECK(ordered);
    }
    std::ostringstream out;
    write_census_csv(out, rows);
    CHECK(count_lines(out.str()) == rows.size() + 1);
  }

  TEST_CASE("a persistent dropper on a static line is caught by every detector") {
    for (DetectorVariant v : all_variants()) {
      CAPTURE(to_string(v));
      ScenarioConfig c = line_with_dropper();
      c.variant = v;
      const RunMetrics r = run_scenario(c);
      CHECK(r.malicious_on_path == 1);
      CHECK(r.detection_rate == 1.0);
      CHECK(r.nodes[2].flagged);
    }
  }
}
