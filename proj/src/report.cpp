#include "cocoaudit/report.hpp"

#include <chrono>
#include <sstream>

#include "cocoaudit/errors.hpp"

namespace cocoaudit {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

OrderedJson optional_number(const std::optional<double>& v) {
  return v ? OrderedJson(*v) : OrderedJson(nullptr);
}

OrderedJson buckets_json(const auto& buckets) {
  OrderedJson j = OrderedJson::object();
  for (std::size_t i = 0; i < kBucketCount; ++i) {
    j[to_string(static_cast<SizeBucket>(i))] = buckets[i];
  }
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

}  // namespace

HistogramSection histogram_section(std::span<const SurfaceDistanceResult> results,
                                   Metric metric, int bins) {
  HistogramSection h;
  h.metric = metric;
  h.total = results.size();
  for (const auto& r : results) {
    if ((metric == Metric::kAverage ? r.d_avg : r.d_max) <= 1.0) {
      ++h.excluded_below_1px;
    }
  }
  try {
    h.histogram = distance_histogram(results, metric, bins);
  } catch (const StatsError& e) {
    h.empty_reason = e.what();
  }
  return h;
}

DiffOutcome run_diff(const AnnotationDataset& source,
                     const AnnotationDataset& target,
                     const DiffOptions& options) {
  options.match.check();
  if (options.bins < 1) throw StatsError("histogram needs at least one bin");

  DiffOutcome out;
  AuditReport& rep = out.report;
  rep.options = options;
  Stopwatch clock;

  rep.source_summary = summarize(source, options.summary);
  rep.target_summary = summarize(target, options.summary);
  rep.delta = compare(rep.source_summary, rep.target_summary);
  rep.timings.push_back({"summarize", clock.lap()});

  out.matches = match_datasets(source, target, options.match);
  rep.timings.push_back({"match", clock.lap()});

  out.metrics = pair_metrics_all(out.matches.pairs, source, target, options.metrics);
  rep.timings.push_back({"surface_metrics", clock.lap()});

  rep.match.pairs = out.matches.pairs.size();
  rep.match.unmatched_source = out.matches.unmatched_source.size();
  rep.match.unmatched_target = out.matches.unmatched_target.size();
  rep.match.ineligible_source = out.matches.ineligible_source.size();
  rep.match.ineligible_target = out.matches.ineligible_target.size();
  rep.match.degenerate_pairs = out.metrics.degenerate.size();

  rep.d_avg = histogram_section(out.metrics.results, Metric::kAverage, options.bins);
  rep.d_max = histogram_section(out.metrics.results, Metric::kMax, options.bins);
  rep.timings.push_back({"histograms", clock.lap()});

  if (!options.eval_tasks.empty()) {
    rep.eval = cross_table(source, target, options.eval_tasks,
                           options.source_label, options.target_label,
                           options.max_detections);
    rep.timings.push_back({"eval", clock.lap()});
  }
  return out;
}

std::string consistency_problem(const AuditReport& report) {
  for (const HistogramSection* h : {&report.d_avg, &report.d_max}) {
    const std::size_t accounted =
        h->population() + h->excluded_below_1px + report.match.degenerate_pairs;
    if (accounted != report.match.pairs) {
      std::ostringstream os;
      os << to_string(h->metric) << ": " << report.match.pairs << " pairs but "
         << h->population() << " in histogram + " << h->excluded_below_1px
         << " below 1px + " << report.match.degenerate_pairs << " degenerate";
      return os.str();
    }
    if (h->histogram && h->histogram->excluded_below_1px != h->excluded_below_1px) {
      return std::string(to_string(h->metric)) + ": exclusion tallies disagree";
    }
  }
  return {};
}

OrderedJson to_json(const DatasetSummary& s) {
  OrderedJson j;
  j["images"] = s.image_count;
  j["instances"] = s.instance_count;
  j["crowd_instances"] = s.crowd_count;
  j["polygon_vertices"] = s.vertex_count;
  OrderedJson cats = OrderedJson::array();
  for (const auto& [id, n] : s.per_category) {
    OrderedJson c;
    c["id"] = id;
    auto it = s.category_names.find(id);
    c["name"] = it == s.category_names.end() ? "" : it->second;
    c["instances"] = n;
    cats.push_back(std::move(c));
  }
  j["categories"] = std::move(cats);
  j["size_buckets"] = buckets_json(s.buckets);
  return j;
}

OrderedJson to_json(const DatasetDelta& d) {
  OrderedJson j;
  j["images"] = d.images;
  j["instances"] = d.instances;
  j["crowd_instances"] = d.crowds;
  j["polygon_vertices"] = d.vertices;
  j["categories_target_greater"] = d.categories_b_greater;
  OrderedJson cats = OrderedJson::array();
  for (const auto& [id, delta] : d.per_category) {
    cats.push_back({{"id", id}, {"delta", delta}});
  }
  j["categories"] = std::move(cats);
  j["size_buckets"] = buckets_json(d.buckets);
  return j;
}

OrderedJson to_json(const HistogramSection& h) {
  OrderedJson j;
  j["metric"] = to_string(h.metric);
  j["total"] = h.total;
  j["excluded_below_1px"] = h.excluded_below_1px;
  j["population"] = h.population();
  j["empty"] = !h.histogram.has_value();
  if (h.histogram) {
    const auto& hist = *h.histogram;
    j["mean"] = hist.mean;
    j["stddev"] = hist.stddev;
    j["clip"] = hist.clip;
    j["overflow"] = hist.overflow;
    OrderedJson bins = OrderedJson::array();
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      bins.push_back({{"lo", hist.edges[i]},
                      {"hi", hist.edges[i + 1]},
                      {"count", hist.counts[i]}});
    }
    j["bins"] = std::move(bins);
  } else {
    j["reason"] = h.empty_reason;
    j["mean"] = nullptr;
    j["stddev"] = nullptr;
    j["clip"] = nullptr;
    j["overflow"] = 0;
    j["bins"] = OrderedJson::array();
  }
  return j;
}

OrderedJson to_json(const EvalResult& r) {
  OrderedJson j;
  j["task"] = to_string(r.task);
  j["map"] = optional_number(r.map);
  j["map50"] = optional_number(r.map50);
  j["map75"] = optional_number(r.map75);
  j["map_small"] = optional_number(r.map_small);
  j["map_medium"] = optional_number(r.map_medium);
  j["map_large"] = optional_number(r.map_large);
  OrderedJson cats = OrderedJson::array();
  for (const auto& [id, ap] : r.per_category) {
    cats.push_back({{"id", id}, {"ap", optional_number(ap)}});
  }
  j["categories"] = std::move(cats);
  return j;
}

OrderedJson to_json(const CrossTableRow& row) {
  OrderedJson j;
  j["detections"] = row.source;
  j["ground_truth"] = row.target;
  j["result"] = to_json(row.result);
  return j;
}

OrderedJson to_json(const AuditReport& report, bool with_timings) {
  const DiffOptions& o = report.options;
  OrderedJson j;
  j["schema"] = kReportSchemaId;
  j["tool"] = "cocoaudit";
  j["version"] = kToolVersion;
  j["command"] = "diff";

  OrderedJson cfg;
  cfg["source"] = o.source_label;
  cfg["target"] = o.target_label;
  cfg["iou_threshold"] = o.match.iou_threshold;
  cfg["iou_mode"] = to_string(o.match.iou_mode);
  cfg["same_category"] = o.match.same_category;
  cfg["tie_break"] = "source_then_target";
  cfg["structuring"] = o.metrics.structuring == Structuring::kCross ? "cross" : "square";
  cfg["crop"] = o.metrics.crop;
  cfg["area_mode"] = to_string(o.summary.area_mode);
  cfg["size_rule"] = to_string(o.summary.size_rule);
  cfg["bins"] = o.bins;
  OrderedJson tasks = OrderedJson::array();
  for (EvalTask t : o.eval_tasks) tasks.push_back(to_string(t));
  cfg["eval_tasks"] = std::move(tasks);
  cfg["max_detections"] = o.max_detections;
  j["config"] = std::move(cfg);

  j["summaries"] = {{"source", to_json(report.source_summary)},
                    {"target", to_json(report.target_summary)}};
  j["delta"] = to_json(report.delta);

  const MatchStats& m = report.match;
  j["match"] = {{"pairs", m.pairs},
                {"unmatched_source", m.unmatched_source},
                {"unmatched_target", m.unmatched_target},
                {"ineligible_source", m.ineligible_source},
                {"ineligible_target", m.ineligible_target},
                {"degenerate_pairs", m.degenerate_pairs}};
  j["histograms"] = {{"d_avg", to_json(report.d_avg)},
                     {"d_max", to_json(report.d_max)}};

  OrderedJson eval = OrderedJson::array();
  for (const auto& row : report.eval) eval.push_back(to_json(row));
  j["eval"] = std::move(eval);

  if (with_timings) {
    OrderedJson t = OrderedJson::object();
    for (const auto& s : report.timings) t[s.stage] = s.seconds;
    j["timings"] = std::move(t);
  }
  return j;
}

OrderedJson stats_report(const DatasetSummary& s, const SummaryOptions& options,
                         const std::string& path) {
  OrderedJson j;
  j["tool"] = "cocoaudit";
  j["version"] = kToolVersion;
  j["command"] = "stats";
  j["config"] = {{"input", path},
                 {"area_mode", to_string(options.area_mode)},
                 {"size_rule", to_string(options.size_rule)}};
  j["summary"] = to_json(s);
  return j;
}

void write_summary_csv(std::ostream& out, const DatasetSummary& s) {
  out << "category_id,name,instances\n";
  for (const auto& [id, n] : s.per_category) {
    auto it = s.category_names.find(id);
    out << id << ',' << csv_field(it == s.category_names.end() ? "" : it->second)
        << ',' << n << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const HistogramSection& h) {
  out << "metric,bin,lo,hi,count\n";
  if (!h.histogram) return;
  const auto& hist = *h.histogram;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << to_string(h.metric) << ',' << i << ',' << csv_number(hist.edges[i])
        << ',' << csv_number(hist.edges[i + 1]) << ',' << hist.counts[i] << '\n';
  }
}

void write_eval_csv(std::ostream& out, const std::vector<CrossTableRow>& rows) {
  out << "task,detections,ground_truth,map,map50,map75,map_small,map_medium,"
         "map_large\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    out << to_string(row.task) << ',' << csv_field(row.source) << ','
        << csv_field(row.target) << ',' << csv_number(r.map) << ','
        << csv_number(r.map50) << ',' << csv_number(r.map75) << ','
        << csv_number(r.map_small) << ',' << csv_number(r.map_medium) << ','
        << csv_number(r.map_large) << '\n';
  }
}

}  // namespace cocoaudit
