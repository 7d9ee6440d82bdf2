#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "coopdetect/scenario.hpp"
#include "coopdetect/simulation.hpp"

namespace coopdetect {

RunMetrics run_scenario(const ScenarioConfig& config, TraceSink* trace = nullptr);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single run
};

struct VariantSummary {
  DetectorVariant variant;
  std::size_t runs = 0;
  MetricSummary false_alarm_rate;
  MetricSummary detection_rate;
  MetricSummary delivered_ratio;
  MetricSummary control_messages;
};

struct MatrixResult {
  std::vector<RunMetrics> runs;  // ordered by (variant as given, seed as given)
  std::vector<VariantSummary> summaries;
};

/// Runs every (variant, seed) pair of `base`. Independent runs use up to
/// `threads` workers; 0 picks the hardware concurrency. Throws
/// std::invalid_argument for an empty seed or variant list.
MatrixResult run_matrix(const ScenarioConfig& base, const std::vector<DetectorVariant>& variants,
                        const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

struct CensusRow {
  NodeId node;
  bool malicious = false;
  double drop_probability = 0.0;
  bool on_path = false;
  std::uint32_t complaints = 0;
};

/// Nodes ordered by complaint count descending, ties by node id.
std::vector<CensusRow> complaint_census(const RunMetrics& run);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view s);
/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

void write_runs_csv(std::ostream& out, const std::vector<RunMetrics>& runs);
/// One row per run followed by one summary row per variant.
void write_matrix_csv(std::ostream& out, const MatrixResult& result);
void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows);

}  // namespace coopdetect
