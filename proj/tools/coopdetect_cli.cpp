#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopdetect/experiment.hpp"
#include "coopdetect/scenario.hpp"
#include "coopdetect/trace.hpp"

namespace fs = std::filesystem;
using namespace coopdetect;

namespace {

// Accepts "7", "1,4,9" and inclusive ranges such as "1-20".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw CLI::ValidationError("--seeds", "bad seed: " + std::string(s));
    return v;
  };
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item(text.data() + pos, comma - pos);
    if (item.empty()) throw CLI::ValidationError("--seeds", "empty seed list entry");
    if (const auto dash = item.find('-'); dash != std::string_view::npos) {
      const auto lo = number(item.substr(0, dash));
      const auto hi = number(item.substr(dash + 1));
      if (hi < lo) throw CLI::ValidationError("--seeds", "descending range");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(number(item));
    }
    pos = comma + 1;
  }
  return seeds;
}

std::vector<DetectorVariant> parse_variants(const std::vector<std::string>& names) {
  std::vector<DetectorVariant> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (auto v : all_variants()) out.push_back(v);
    } else {
      out.push_back(parse_variant(n));
    }
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::string seeds = "1";
  std::vector<std::string> variants{"proposed"};
  unsigned threads = 0;
  bool trace = false;
};

ScenarioConfig load(const Options& o) { return o.config.empty() ? table1_preset() : load_config(o.config); }

int cmd_run(const Options& o) {
  const ScenarioConfig base = load(o);
  fs::create_directories(o.out_dir);
  std::vector<RunMetrics> runs;
  for (DetectorVariant v : parse_variants(o.variants)) {
    for (std::uint64_t seed : parse_seeds(o.seeds)) {
      ScenarioConfig c = base;
      c.variant = v;
      c.seed = seed;
      const std::string stem = std::string(to_string(v)) + "_" + std::to_string(seed);
      if (o.trace) {
        auto out = open_output(fs::path(o.out_dir) / ("trace_" + stem + ".jsonl"));
        TraceSink sink(out);
        runs.push_back(run_scenario(c, &sink));
      } else {
        runs.push_back(run_scenario(c));
      }
      const auto& r = runs.back();
      std::cout << to_string(v) << " seed " << seed << ": false_alarm_rate " << format_number(r.false_alarm_rate)
                << " detection_rate " << format_number(r.detection_rate) << " delivered " << r.delivered << "/"
                << r.originated << '\n';
    }
  }
  auto out = open_output(fs::path(o.out_dir) / "runs.csv");
  write_runs_csv(out, runs);
  return 0;
}

int cmd_matrix(const Options& o) {
  const ScenarioConfig base = load(o);
  fs::create_directories(o.out_dir);
  const auto result = run_matrix(base, parse_variants(o.variants), parse_seeds(o.seeds), o.threads);
  auto out = open_output(fs::path(o.out_dir) / "matrix.csv");
  write_matrix_csv(out, result);
  for (const auto& s : result.summaries)
    std::cout << to_string(s.variant) << ": runs " << s.runs << " false_alarm_rate "
              << format_number(s.false_alarm_rate.mean) << " (sd " << format_number(s.false_alarm_rate.sd)
              << ") detection_rate " << format_number(s.detection_rate.mean) << " (sd "
              << format_number(s.detection_rate.sd) << ")\n";
  return 0;
}

int cmd_census(const Options& o) {
  const ScenarioConfig base = load(o);
  fs::create_directories(o.out_dir);
  for (DetectorVariant v : parse_variants(o.variants)) {
    for (std::uint64_t seed : parse_seeds(o.seeds)) {
      ScenarioConfig c = base;
      c.variant = v;
      c.seed = seed;
      const auto rows = complaint_census(run_scenario(c));
      const auto path = fs::path(o.out_dir) / ("census_" + std::string(to_string(v)) + "_" + std::to_string(seed) + ".csv");
      auto out = open_output(path);
      write_census_csv(out, rows);
      std::cout << path.string() << '\n';
    }
  }
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("-c,--config", o.config, "Scenario config file (default: built-in reference preset)")
      ->check(CLI::ExistingFile);
  sub->add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();
  sub->add_option("-s,--seeds", o.seeds, "Seeds: list and ranges, e.g. 1-20 or 3,5,8")->capture_default_str();
  sub->add_option("-v,--variants", o.variants,
                  "Detector variants: proposed, naive_watchdog, individual_observation or all")
      ->delimiter(',')
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-dropping detection experiments"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run single scenarios and write runs.csv");
  add_common(run, o);
  run->add_flag("--trace", o.trace, "Write a line-delimited JSON event trace per run");

  auto* matrix = app.add_subcommand("matrix", "Run variants x seeds and write matrix.csv with summaries");
  add_common(matrix, o);
  matrix->add_option("-j,--threads", o.threads, "Worker threads (0 = hardware concurrency)");

  auto* census = app.add_subcommand("census", "Write per-node complaint tables");
  add_common(census, o);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(o);
    if (matrix->parsed()) return cmd_matrix(o);
    if (census->parsed()) return cmd_census(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& p : e.problems) std::cerr << "  - " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
