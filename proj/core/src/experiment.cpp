#include "coopdetect/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace coopdetect {

RunMetrics run_scenario(const ScenarioConfig& config, TraceSink* trace) {
  Simulation sim(config, trace);
  return sim.run();
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

double delivered_ratio(const RunMetrics& m) {
  return m.originated == 0 ? 0.0 : static_cast<double>(m.delivered) / static_cast<double>(m.originated);
}

}  // namespace

MatrixResult run_matrix(const ScenarioConfig& base, const std::vector<DetectorVariant>& variants,
                        const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (seeds.empty()) throw std::invalid_argument("run_matrix needs at least one seed");
  if (variants.empty()) throw std::invalid_argument("run_matrix needs at least one variant");
  if (auto problems = base.validate(); !problems.empty()) throw ConfigError("invalid config", problems);

  struct Job {
    DetectorVariant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (DetectorVariant v : variants)
    for (std::uint64_t s : seeds) jobs.push_back({v, s});

  MatrixResult result;
  result.runs.resize(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        ScenarioConfig c = base;
        c.variant = jobs[i].variant;
        c.seed = jobs[i].seed;
        result.runs[i] = run_scenario(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (DetectorVariant v : variants) {
    std::vector<double> fa, dr, dl, cm;
    for (const auto& r : result.runs) {
      if (r.variant != v) continue;
      fa.push_back(r.false_alarm_rate);
      dr.push_back(r.detection_rate);
      dl.push_back(delivered_ratio(r));
      cm.push_back(static_cast<double>(r.control_messages));
    }
    result.summaries.push_back({v, fa.size(), summarize(fa), summarize(dr), summarize(dl), summarize(cm)});
  }
  return result;
}

std::vector<CensusRow> complaint_census(const RunMetrics& run) {
  std::vector<CensusRow> rows;
  rows.reserve(run.nodes.size());
  for (const auto& n : run.nodes) rows.push_back({n.node, n.malicious, n.drop_probability, n.on_path, n.complaints});
  std::stable_sort(rows.begin(), rows.end(), [](const CensusRow& a, const CensusRow& b) {
    if (a.complaints != b.complaints) return a.complaints > b.complaints;
    return a.node < b.node;
  });
  return rows;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr std::string_view kRunColumns =
    "kind,variant,seed,runs,false_alarm_rate,false_alarm_rate_sd,detection_rate,detection_rate_sd,"
    "delivered_ratio,delivered_ratio_sd,control_messages,control_messages_sd,honest_on_path,malicious_on_path,"
    "honest_flagged,malicious_flagged,originated,delivered,malicious_drops,congestion_drops,collision_losses,"
    "modified,route_expired,in_flight,challenges,certificates,alarms";

void write_run_row(std::ostream& out, const RunMetrics& r) {
  out << "run," << csv_field(to_string(r.variant)) << ',' << r.seed << ",1," << format_number(r.false_alarm_rate)
      << ",," << format_number(r.detection_rate) << ",," << format_number(delivered_ratio(r)) << ",,"
      << r.control_messages << ",," << r.honest_on_path << ',' << r.malicious_on_path << ',' << r.honest_flagged
      << ',' << r.malicious_flagged << ',' << r.originated << ',' << r.delivered << ',' << r.malicious_drops << ','
      << r.congestion_drops << ',' << r.collision_losses << ',' << r.modified << ',' << r.route_expired << ','
      << r.in_flight << ',' << r.challenges << ',' << r.certificates << ',' << r.alarms << "\r\n";
}

}  // namespace

void write_runs_csv(std::ostream& out, const std::vector<RunMetrics>& runs) {
  out << kRunColumns << "\r\n";
  for (const auto& r : runs) write_run_row(out, r);
}

void write_matrix_csv(std::ostream& out, const MatrixResult& result) {
  write_runs_csv(out, result.runs);
  for (const auto& s : result.summaries) {
    out << "summary," << csv_field(to_string(s.variant)) << ",," << s.runs << ',' << format_number(s.false_alarm_rate.mean)
        << ',' << format_number(s.false_alarm_rate.sd) << ',' << format_number(s.detection_rate.mean) << ','
        << format_number(s.detection_rate.sd) << ',' << format_number(s.delivered_ratio.mean) << ','
        << format_number(s.delivered_ratio.sd) << ',' << format_number(s.control_messages.mean) << ','
        << format_number(s.control_messages.sd) << ",,,,,,,,,,,,,,,\r\n";
  }
}

void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows) {
  out << "node,malicious,drop_probability,on_path,complaints\r\n";
  for (const auto& r : rows)
    out << r.node.value << ',' << (r.malicious ? 1 : 0) << ',' << format_number(r.drop_probability) << ','
        << (r.on_path ? 1 : 0) << ',' << r.complaints << "\r\n";
}

}  // namespace coopdetect
