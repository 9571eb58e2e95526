#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cocoaudit/dataset.hpp"

namespace cocoaudit {

enum class EvalTask { kBbox, kSegm };

const char* to_string(EvalTask t);
EvalTask eval_task_from_string(const std::string& s);

struct Detection {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  double score = 1.0;
  Box box;
  std::optional<ShapeSpec> segmentation;
};

// Sorted by (image id, detection id).
struct DetectionSet {
  std::vector<Detection> detections;
};

// Every non-crowd instance as a detection with score 1.0; ids are the
// instance ids.
DetectionSet annotations_as_detections(const AnnotationDataset& ds);

// Results-format JSON array: [{image_id, category_id, bbox, score,
// segmentation?}, ...]. Ids are assigned 1..N in file order. Boxes missing
// but segmentation present get the mask's bounding box.
DetectionSet parse_results(std::string_view bytes,
                           const AnnotationDataset& gt);

struct AreaRange {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
};

// Which number stratifies ground truth by size.
enum class GtAreaSource { kStored, kBox, kMask };

struct EvalParams {
  EvalTask task = EvalTask::kBbox;
  std::vector<double> iou_thresholds;  // strictly increasing in (0, 1]
  int recall_points = 101;
  std::vector<AreaRange> area_ranges;  // first entry must be "all"
  int max_detections = 100;            // per image and category; 0 = no cap
  // Stored area falls back to box (bbox) or mask (segm) area when absent.
  GtAreaSource gt_area = GtAreaSource::kStored;

  static EvalParams coco(EvalTask task);
  void check() const;
};

struct EvalResult {
  EvalTask task = EvalTask::kBbox;
  // nullopt marks a stratum without ground truth.
  std::optional<double> map;
  std::optional<double> map50;
  std::optional<double> map75;
  std::optional<double> map_small;
  std::optional<double> map_medium;
  std::optional<double> map_large;
  std::map<std::int64_t, std::optional<double>> per_category;
};

EvalResult evaluate(const DetectionSet& dets, const AnnotationDataset& gt,
                    const EvalParams& params);

struct CrossTableRow {
  EvalTask task;
  std::string source;  // dataset scored as predictions
  std::string target;  // dataset used as ground truth
  EvalResult result;
};

// a scored against b and b against a, for each task.
std::vector<CrossTableRow> cross_table(const AnnotationDataset& a,
                                       const AnnotationDataset& b,
                                       const std::vector<EvalTask>& tasks,
                                       const std::string& a_label = "a",
                                       const std::string& b_label = "b",
                                       int max_detections = 100);

}  // namespace cocoaudit
