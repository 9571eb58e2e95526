// cocoaudit: compare two COCO-format annotation sets.
//
// Exit codes: 0 success, 2 input or usage error, 3 diff/match found no pairs.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>

#include "CLI11.hpp"
#include "cocoaudit/dataset.hpp"
#include "cocoaudit/errors.hpp"
#include "cocoaudit/eval.hpp"
#include "cocoaudit/matching.hpp"
#include "cocoaudit/report.hpp"
#include "cocoaudit/stats.hpp"

namespace fs = std::filesystem;
using namespace cocoaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

void write_csv_file(const fs::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  writer(out);
}

std::string label_of(const std::string& path) {
  return fs::path(path).filename().string();
}

std::vector<EvalTask> tasks_from(const std::string& s) {
  if (s == "none") return {};
  if (s == "both") return {EvalTask::kBbox, EvalTask::kSegm};
  return {eval_task_from_string(s)};
}

struct MatchFlags {
  double iou_threshold = 0.90;
  std::string iou_mode = "box";
  bool any_category = false;
  CLI::Option* threshold_opt = nullptr;

  MatchConfig config() const {
    MatchConfig c;
    c.iou_threshold = iou_threshold;
    c.iou_mode = iou_mode_from_string(iou_mode);
    c.same_category = !any_category;
    return c;
  }
};

std::string check_threshold(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && v > 0.0 && v <= 1.0) return {};
  } catch (const std::exception&) {
  }
  return "IoU threshold must be in (0, 1], got " + s;
}

std::string check_jobs(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v >= 0) return {};
  } catch (const std::exception&) {
  }
  return "jobs must be a non-negative integer, got " + s;
}

// CLI11 drops an environment value that fails its validator and falls back
// to the default. A bad override should be an input error instead, so the
// environment is consulted here, after parsing, and only when the flag was
// not given on the command line.
template <typename T>
void apply_env(const CLI::Option* opt, const char* name,
               std::string (*check)(const std::string&), T& value) {
  if (opt->count() > 0) return;
  const char* raw = std::getenv(name);
  if (raw == nullptr) return;
  const std::string s(raw);
  if (auto err = check(s); !err.empty()) {
    throw std::invalid_argument(std::string(name) + ": " + err);
  }
  if constexpr (std::is_same_v<T, int>) {
    value = std::stoi(s);
  } else {
    value = std::stod(s);
  }
}

void add_match_flags(CLI::App* cmd, MatchFlags& f) {
  f.threshold_opt = cmd->add_option("--iou-threshold", f.iou_threshold,
                                    "pairs need IoU strictly above this, in (0, 1]; "
                                    "env COCOAUDIT_IOU_THRESHOLD")
                        ->check(check_threshold);
  cmd->add_option("--iou-mode", f.iou_mode, "box or mask")
      ->check(CLI::IsMember({"box", "mask"}));
  cmd->add_flag("--any-category", f.any_category,
                "allow pairs across categories");
}

CLI::Option* add_jobs_flag(CLI::App* cmd, int& jobs) {
  return cmd->add_option("--jobs,-j", jobs,
                         "worker threads (0 = runtime default); env COCOAUDIT_JOBS")
      ->check(check_jobs);
}

void apply_jobs(const CLI::Option* opt, int jobs) {
  apply_env(opt, "COCOAUDIT_JOBS", check_jobs, jobs);
  if (jobs > 0) omp_set_num_threads(jobs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit and compare COCO-format annotation sets"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  int jobs = 0;

  // stats
  std::string stats_path, stats_out, stats_csv;
  std::string area_mode = "stored", size_rule = "area";
  auto* stats = app.add_subcommand("stats", "summarize one annotation file");
  stats->add_option("dataset", stats_path)->required();
  stats->add_option("--out,-o", stats_out, "report path (default stdout)");
  stats->add_option("--csv", stats_csv, "per-category CSV path");
  stats->add_option("--area-mode", area_mode, "stored or recomputed")
      ->check(CLI::IsMember({"stored", "recomputed"}));
  stats->add_option("--size-rule", size_rule, "area or dims")
      ->check(CLI::IsMember({"area", "dims"}));

  // diff
  std::string diff_src, diff_tgt, diff_out, pairs_out, csv_dir;
  std::string diff_eval = "none", structuring = "cross";
  std::string diff_area_mode = "stored", diff_size_rule = "area";
  int bins = kDefaultBins;
  int diff_max_dets = 100;
  bool crop = false, no_timings = false;
  MatchFlags diff_match;
  auto* diff = app.add_subcommand("diff", "match two annotation sets and measure boundary disagreement");
  diff->add_option("source", diff_src)->required();
  diff->add_option("target", diff_tgt)->required();
  add_match_flags(diff, diff_match);
  auto* diff_jobs = add_jobs_flag(diff, jobs);
  diff->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
  diff->add_option("--out,-o", diff_out, "report path (default stdout)");
  diff->add_option("--pairs-out", pairs_out, "per-pair NDJSON path");
  diff->add_option("--csv-dir", csv_dir, "directory for CSV exports");
  diff->add_flag("--crop", crop, "rasterize each pair on its bounding window");
  diff->add_option("--structuring", structuring, "cross or square")
      ->check(CLI::IsMember({"cross", "square"}));
  diff->add_option("--eval", diff_eval, "also cross-evaluate: none, bbox, segm or both")
      ->check(CLI::IsMember({"none", "bbox", "segm", "both"}));
  diff->add_option("--max-dets", diff_max_dets, "detections per image and category, 0 = no cap")
      ->check(CLI::NonNegativeNumber);
  diff->add_option("--area-mode", diff_area_mode, "stored or recomputed")
      ->check(CLI::IsMember({"stored", "recomputed"}));
  diff->add_option("--size-rule", diff_size_rule, "area or dims")
      ->check(CLI::IsMember({"area", "dims"}));
  diff->add_flag("--no-timings", no_timings, "omit the timings section");

  // eval
  std::string eval_src, eval_tgt, eval_out, eval_task = "bbox", eval_csv;
  int eval_max_dets = 100;
  auto* eval = app.add_subcommand(
      "eval", "score source (annotations or results array) against target ground truth");
  eval->add_option("source", eval_src)->required();
  eval->add_option("target", eval_tgt)->required();
  eval->add_option("--task", eval_task, "bbox, segm or both")
      ->check(CLI::IsMember({"bbox", "segm", "both"}));
  eval->add_option("--max-dets", eval_max_dets, "detections per image and category, 0 = no cap")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--out,-o", eval_out, "report path (default stdout)");
  eval->add_option("--csv", eval_csv, "CSV path");
  auto* eval_jobs = add_jobs_flag(eval, jobs);

  // match
  std::string match_src, match_tgt, match_out;
  MatchFlags match_flags;
  auto* match = app.add_subcommand("match", "dump matched pairs as NDJSON");
  match->add_option("source", match_src)->required();
  match->add_option("target", match_tgt)->required();
  add_match_flags(match, match_flags);
  auto* match_jobs = add_jobs_flag(match, jobs);
  match->add_option("--out,-o", match_out, "NDJSON path (default stdout)");

  // validate
  std::string validate_path;
  double area_tolerance = 0.10;
  auto* validate_cmd = app.add_subcommand("validate", "list annotation problems");
  validate_cmd->add_option("dataset", validate_path)->required();
  validate_cmd->add_option("--area-tolerance", area_tolerance,
                           "relative stored-vs-raster area tolerance")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*stats) {
      SummaryOptions opts{area_mode_from_string(area_mode),
                          size_rule_from_string(size_rule)};
      const auto ds = load_dataset(stats_path);
      const auto summary = summarize(ds, opts);
      emit(stats_out, stats_report(summary, opts, label_of(stats_path)).dump(2) + "\n");
      if (!stats_csv.empty()) {
        write_csv_file(stats_csv, [&](std::ostream& o) { write_summary_csv(o, summary); });
      }
      return kExitOk;
    }

    if (*diff) {
      apply_jobs(diff_jobs, jobs);
      apply_env(diff_match.threshold_opt, "COCOAUDIT_IOU_THRESHOLD", check_threshold,
                diff_match.iou_threshold);
      DiffOptions opts;
      opts.match = diff_match.config();
      opts.metrics.structuring =
          structuring == "square" ? Structuring::kSquare : Structuring::kCross;
      opts.metrics.crop = crop;
      opts.summary = {area_mode_from_string(diff_area_mode),
                      size_rule_from_string(diff_size_rule)};
      opts.bins = bins;
      opts.eval_tasks = tasks_from(diff_eval);
      opts.max_detections = diff_max_dets;
      opts.source_label = label_of(diff_src);
      opts.target_label = label_of(diff_tgt);

      const auto src = load_dataset(diff_src);
      const auto tgt = load_dataset(diff_tgt);
      const DiffOutcome outcome = run_diff(src, tgt, opts);

      emit(diff_out, to_json(outcome.report, !no_timings).dump(2) + "\n");
      if (!pairs_out.empty()) {
        std::ofstream out(pairs_out, std::ios::binary);
        if (!out) throw Error("cannot write " + pairs_out);
        for (const auto& r : outcome.metrics.results) write_result_ndjson(out, r);
      }
      if (!csv_dir.empty()) {
        const fs::path dir(csv_dir);
        fs::create_directories(dir);
        const auto& rep = outcome.report;
        write_csv_file(dir / "source_summary.csv",
                       [&](std::ostream& o) { write_summary_csv(o, rep.source_summary); });
        write_csv_file(dir / "target_summary.csv",
                       [&](std::ostream& o) { write_summary_csv(o, rep.target_summary); });
        write_csv_file(dir / "hist_d_avg.csv",
                       [&](std::ostream& o) { write_histogram_csv(o, rep.d_avg); });
        write_csv_file(dir / "hist_d_max.csv",
                       [&](std::ostream& o) { write_histogram_csv(o, rep.d_max); });
        if (!rep.eval.empty()) {
          write_csv_file(dir / "eval.csv",
                         [&](std::ostream& o) { write_eval_csv(o, rep.eval); });
        }
      }
      if (outcome.report.match.pairs == 0) {
        std::cerr << "cocoaudit: no pairs above IoU " << opts.match.iou_threshold << "\n";
        return kExitEmpty;
      }
      return kExitOk;
    }

    if (*eval) {
      apply_jobs(eval_jobs, jobs);
      const auto gt = load_dataset(eval_tgt);
      const std::string bytes = read_file(eval_src);
      const auto first = bytes.find_first_not_of(" \t\r\n");
      const bool results_format = first != std::string::npos && bytes[first] == '[';
      const DetectionSet dets = results_format
                                    ? parse_results(bytes, gt)
                                    : annotations_as_detections(parse_dataset(bytes));

      std::vector<CrossTableRow> rows;
      for (EvalTask task : tasks_from(eval_task)) {
        EvalParams params = EvalParams::coco(task);
        params.max_detections = eval_max_dets;
        rows.push_back({task, label_of(eval_src), label_of(eval_tgt),
                        evaluate(dets, gt, params)});
      }
      OrderedJson j;
      j["tool"] = "cocoaudit";
      j["version"] = kToolVersion;
      j["command"] = "eval";
      j["config"] = {{"detections", label_of(eval_src)},
                     {"ground_truth", label_of(eval_tgt)},
                     {"results_format", results_format},
                     {"task", eval_task},
                     {"max_detections", eval_max_dets}};
      OrderedJson res = OrderedJson::array();
      for (const auto& row : rows) res.push_back(to_json(row));
      j["results"] = std::move(res);
      emit(eval_out, j.dump(2) + "\n");
      if (!eval_csv.empty()) {
        write_csv_file(eval_csv, [&](std::ostream& o) { write_eval_csv(o, rows); });
      }
      return kExitOk;
    }

    if (*match) {
      apply_jobs(match_jobs, jobs);
      apply_env(match_flags.threshold_opt, "COCOAUDIT_IOU_THRESHOLD", check_threshold,
                match_flags.iou_threshold);
      const MatchConfig cfg = match_flags.config();
      const auto src = load_dataset(match_src);
      const auto tgt = load_dataset(match_tgt);
      const MatchSet ms = match_datasets(src, tgt, cfg);
      std::ostringstream out;
      write_pairs_ndjson(out, ms);
      emit(match_out, out.str());
      if (ms.pairs.empty()) {
        std::cerr << "cocoaudit: no pairs above IoU " << cfg.iou_threshold << "\n";
        return kExitEmpty;
      }
      return kExitOk;
    }

    if (*validate_cmd) {
      ParseOptions popts;
      popts.check_integrity = false;
      const auto ds = parse_dataset(read_file(validate_path), popts);
      ValidateOptions vopts;
      vopts.area_tolerance = area_tolerance;
      OrderedJson issues = OrderedJson::array();
      for (const auto& issue : validate(ds, vopts)) {
        issues.push_back({{"kind", to_string(issue.kind)},
                          {"record_id", issue.record_id},
                          {"detail", issue.detail}});
      }
      OrderedJson j;
      j["tool"] = "cocoaudit";
      j["version"] = kToolVersion;
      j["command"] = "validate";
      j["issue_count"] = issues.size();
      j["issues"] = std::move(issues);
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "cocoaudit: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "cocoaudit: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "cocoaudit: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "cocoaudit: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
