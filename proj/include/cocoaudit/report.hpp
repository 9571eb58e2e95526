#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cocoaudit/dataset.hpp"
#include "cocoaudit/eval.hpp"
#include "cocoaudit/matching.hpp"
#include "cocoaudit/stats.hpp"
#include "cocoaudit/surface.hpp"

namespace cocoaudit {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr const char* kReportSchemaId = "cocoaudit/audit_report/v1";

using OrderedJson = nlohmann::ordered_json;

struct DiffOptions {
  MatchConfig match;
  PairMetricsOptions metrics;
  SummaryOptions summary;
  int bins = kDefaultBins;
  std::vector<EvalTask> eval_tasks;  // empty: no cross evaluation
  int max_detections = 100;
  std::string source_label = "source";
  std::string target_label = "target";
};

// A histogram, or the reason none could be built. Counts stay meaningful
// either way so the report can be reconciled against the pair count.
struct HistogramSection {
  Metric metric = Metric::kAverage;
  std::optional<DistanceHistogram> histogram;
  std::string empty_reason;
  std::size_t total = 0;
  std::size_t excluded_below_1px = 0;

  std::size_t population() const {
    return histogram ? histogram->population() : 0;
  }
};

HistogramSection histogram_section(std::span<const SurfaceDistanceResult> results,
                                   Metric metric, int bins);

struct MatchStats {
  std::size_t pairs = 0;
  std::size_t unmatched_source = 0;
  std::size_t unmatched_target = 0;
  std::size_t ineligible_source = 0;
  std::size_t ineligible_target = 0;
  std::size_t degenerate_pairs = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct AuditReport {
  DiffOptions options;
  DatasetSummary source_summary;
  DatasetSummary target_summary;
  DatasetDelta delta;
  MatchStats match;
  HistogramSection d_avg;
  HistogramSection d_max;
  std::vector<CrossTableRow> eval;
  std::vector<StageTiming> timings;
};

struct DiffOutcome {
  AuditReport report;
  MatchSet matches;
  PairMetricsBatch metrics;
};

DiffOutcome run_diff(const AnnotationDataset& source,
                     const AnnotationDataset& target,
                     const DiffOptions& options);

// Empty string when the counts reconcile, else a description of the gap.
std::string consistency_problem(const AuditReport& report);

OrderedJson to_json(const DatasetSummary& s);
OrderedJson to_json(const DatasetDelta& d);
OrderedJson to_json(const HistogramSection& h);
OrderedJson to_json(const EvalResult& r);
OrderedJson to_json(const CrossTableRow& row);

// Timings go under their own top-level key so everything else is a pure
// function of inputs, flags and version.
OrderedJson to_json(const AuditReport& report, bool with_timings = true);

OrderedJson stats_report(const DatasetSummary& s, const SummaryOptions& options,
                         const std::string& path);

void write_summary_csv(std::ostream& out, const DatasetSummary& s);
void write_histogram_csv(std::ostream& out, const HistogramSection& h);
void write_eval_csv(std::ostream& out, const std::vector<CrossTableRow>& rows);

}  // namespace cocoaudit
