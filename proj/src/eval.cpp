#include "cocoaudit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "cocoaudit/errors.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

const char* to_string(EvalTask t) {
  return t == EvalTask::kBbox ? "bbox" : "segm";
}

EvalTask eval_task_from_string(const std::string& s) {
  if (s == "bbox") return EvalTask::kBbox;
  if (s == "segm") return EvalTask::kSegm;
  throw std::invalid_argument("task must be 'bbox' or 'segm', got '" + s + "'");
}

EvalParams EvalParams::coco(EvalTask task) {
  EvalParams p;
  p.task = task;
  for (int i = 0; i < 10; ++i) p.iou_thresholds.push_back((50 + 5 * i) / 100.0);
  p.recall_points = 101;
  constexpr double kMaxArea = 1e10;
  p.area_ranges = {{"all", 0.0, kMaxArea},
                   {"small", 0.0, 32.0 * 32.0},
                   {"medium", 32.0 * 32.0, 96.0 * 96.0},
                   {"large", 96.0 * 96.0, kMaxArea}};
  p.max_detections = 100;
  return p;
}

void EvalParams::check() const {
  if (iou_thresholds.empty()) throw EvalError("no IoU thresholds");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw EvalError("IoU threshold outside (0, 1]");
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw EvalError("IoU thresholds must be strictly increasing");
    }
  }
  if (recall_points < 2) throw EvalError("need at least two recall points");
  if (area_ranges.empty()) throw EvalError("no area ranges");
  if (max_detections < 0) throw EvalError("max detections must be >= 0");
}

DetectionSet annotations_as_detections(const AnnotationDataset& ds) {
  DetectionSet set;
  for (const auto& inst : ds.instances()) {
    if (inst.iscrowd) continue;
    Detection d;
    d.id = inst.id;
    d.image_id = inst.image_id;
    d.category_id = inst.category_id;
    d.score = 1.0;
    d.box = inst.bbox;
    d.segmentation = inst.segmentation;
    set.detections.push_back(std::move(d));
  }
  std::sort(set.detections.begin(), set.detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.id < b.id;
            });
  return set;
}

namespace {

Box clamp_box(const Box& b, int width, int height) {
  const double x0 = std::clamp(b.x, 0.0, double(width));
  const double y0 = std::clamp(b.y, 0.0, double(height));
  const double x1 = std::clamp(b.x + b.w, 0.0, double(width));
  const double y1 = std::clamp(b.y + b.h, 0.0, double(height));
  return Box{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

DetectionSet parse_results(std::string_view bytes,
                           const AnnotationDataset& gt) {
  Json root;
  try {
    root = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(e.byte, e.what());
  }
  if (!root.is_array()) throw SchemaError("results file must be a JSON array");
  DetectionSet set;
  std::int64_t next_id = 1;
  for (const auto& j : root) {
    const std::string ctx = "result #" + std::to_string(next_id - 1);
    if (!j.is_object()) throw SchemaError(ctx + ": not an object");
    for (const char* key : {"image_id", "category_id", "score"}) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw SchemaError(ctx + ": missing numeric field '" + key + "'");
      }
    }
    Detection d;
    d.id = next_id++;
    d.image_id = j["image_id"].get<std::int64_t>();
    d.category_id = j["category_id"].get<std::int64_t>();
    d.score = j["score"].get<double>();
    const ImageRecord* img = gt.find_image(d.image_id);
    if (!img) {
      throw EvalError(ctx + ": image " + std::to_string(d.image_id) +
                      " is not in the ground truth");
    }
    if (j.contains("segmentation") && !j["segmentation"].is_null()) {
      d.segmentation = parse_segmentation(j["segmentation"], ctx);
    }
    if (j.contains("bbox")) {
      const Json& b = j["bbox"];
      if (!b.is_array() || b.size() != 4) {
        throw SchemaError(ctx + ": bbox must be [x, y, w, h]");
      }
      d.box = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                  b[3].get<double>()};
    } else if (d.segmentation) {
      const BinaryMask m =
          rasterize_shape(*d.segmentation, img->width, img->height);
      d.box = m.any() ? bbox_of(m) : Box{};
    } else {
      throw SchemaError(ctx + ": needs bbox or segmentation");
    }
    d.box = clamp_box(d.box, img->width, img->height);
    set.detections.push_back(std::move(d));
  }
  std::stable_sort(set.detections.begin(), set.detections.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.image_id < b.image_id;
                   });
  return set;
}

namespace {

struct GtItem {
  std::int64_t id;
  bool crowd;
  double area;
};

struct DtItem {
  std::int64_t id;
  double score;
  double area;
};

// One (image, category) cell: ground truth in id order, detections in
// score order and capped, plus their IoU matrix (rows = detections).
struct Cell {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  std::vector<std::size_t> gt_pos;  // into dataset instances
  std::vector<std::size_t> dt_pos;  // into detections
  std::vector<GtItem> gts;
  std::vector<DtItem> dts;
  std::vector<double> ious;  // dts.size() x gts.size()
};

struct EvalImage {
  std::vector<double> scores;
  std::vector<std::uint8_t> matched;  // T x D
  std::vector<std::uint8_t> ignored;  // T x D
  std::size_t non_ignored_gt = 0;
  bool present = false;
};

// Rings with fewer than three vertices are dropped rather than rejected so
// that scoring real corpora never aborts on a stray sliver.
BinaryMask mask_in_window(const ShapeSpec& shape, const ImageRecord& img,
                          const Window& window) {
  if (const auto* poly = std::get_if<PolygonSet>(&shape)) {
    PolygonSet usable;
    for (const auto& r : poly->rings) {
      if (r.size() >= 6) usable.rings.push_back(r);
    }
    return rasterize(usable, window);
  }
  const auto& rle = std::get<RunLengthMask>(shape);
  if (rle.width != img.width || rle.height != img.height) {
    throw EvalError("RLE size does not match image " + std::to_string(img.id));
  }
  const BinaryMask full = decode_rle(rle);
  BinaryMask out(window.width, window.height);
  for (int r = 0; r < window.height; ++r) {
    for (int c = 0; c < window.width; ++c) {
      if (full.at(r + window.y0, c + window.x0)) out.set(r, c);
    }
  }
  return out;
}

// Smallest window holding every shape of the cell.
Window cell_window(const std::vector<const ShapeSpec*>& shapes,
                   const ImageRecord& img) {
  double xmin = img.width, ymin = img.height, xmax = 0, ymax = 0;
  bool any = false;
  for (const auto* s : shapes) {
    if (const auto* poly = std::get_if<PolygonSet>(s)) {
      for (const auto& ring : poly->rings) {
        if (ring.size() < 6) continue;
        const Box b = bbox_of(PolygonSet{{ring}});
        xmin = std::min(xmin, b.x);
        ymin = std::min(ymin, b.y);
        xmax = std::max(xmax, b.x + b.w);
        ymax = std::max(ymax, b.y + b.h);
        any = true;
      }
    } else {
      return Window{0, 0, img.width, img.height};
    }
  }
  if (!any) return Window{0, 0, 1, 1};
  const int x0 = static_cast<int>(std::clamp(std::floor(xmin) - 1, 0.0, double(img.width - 1)));
  const int y0 = static_cast<int>(std::clamp(std::floor(ymin) - 1, 0.0, double(img.height - 1)));
  const int x1 = static_cast<int>(std::clamp(std::ceil(xmax) + 1, double(x0 + 1), double(img.width)));
  const int y1 = static_cast<int>(std::clamp(std::ceil(ymax) + 1, double(y0 + 1), double(img.height)));
  return Window{x0, y0, x1 - x0, y1 - y0};
}

void fill_cell(Cell& cell, const DetectionSet& dets,
               const AnnotationDataset& gt, const EvalParams& params) {
  const ImageRecord& img = *gt.find_image(cell.image_id);
  const auto& instances = gt.instances();

  std::stable_sort(cell.dt_pos.begin(), cell.dt_pos.end(),
                   [&](std::size_t a, std::size_t b) {
                     const auto& da = dets.detections[a];
                     const auto& db = dets.detections[b];
                     if (da.score != db.score) return da.score > db.score;
                     return da.id < db.id;
                   });
  if (params.max_detections > 0 &&
      cell.dt_pos.size() > static_cast<std::size_t>(params.max_detections)) {
    cell.dt_pos.resize(static_cast<std::size_t>(params.max_detections));
  }

  const std::size_t G = cell.gt_pos.size();
  const std::size_t D = cell.dt_pos.size();
  cell.ious.assign(D * G, 0.0);

  std::vector<BinaryMask> gt_masks;
  std::vector<BinaryMask> dt_masks;
  std::vector<std::int64_t> gt_mask_area(G, 0);
  std::vector<std::int64_t> dt_mask_area(D, 0);
  const bool need_gt_masks =
      params.task == EvalTask::kSegm || params.gt_area == GtAreaSource::kMask;
  if (need_gt_masks || params.task == EvalTask::kSegm) {
    std::vector<const ShapeSpec*> shapes;
    for (auto p : cell.gt_pos) shapes.push_back(&instances[p].segmentation);
    if (params.task == EvalTask::kSegm) {
      for (auto p : cell.dt_pos) {
        const auto& d = dets.detections[p];
        if (!d.segmentation) {
          throw EvalError("detection " + std::to_string(d.id) +
                          " has no segmentation for the segm task");
        }
        shapes.push_back(&*d.segmentation);
      }
    }
    const Window window = cell_window(shapes, img);
    for (std::size_t g = 0; g < G; ++g) {
      gt_masks.push_back(
          mask_in_window(instances[cell.gt_pos[g]].segmentation, img, window));
      gt_mask_area[g] = static_cast<std::int64_t>(gt_masks.back().count());
    }
    if (params.task == EvalTask::kSegm) {
      for (std::size_t d = 0; d < D; ++d) {
        dt_masks.push_back(mask_in_window(
            *dets.detections[cell.dt_pos[d]].segmentation, img, window));
        dt_mask_area[d] = static_cast<std::int64_t>(dt_masks.back().count());
      }
    }
  }

  cell.gts.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& inst = instances[cell.gt_pos[g]];
    double area = 0.0;
    switch (params.gt_area) {
      case GtAreaSource::kStored:
        if (inst.area) {
          area = *inst.area;
        } else {
          area = params.task == EvalTask::kBbox
                     ? inst.bbox.area()
                     : static_cast<double>(gt_mask_area[g]);
        }
        break;
      case GtAreaSource::kBox:
        area = inst.bbox.area();
        break;
      case GtAreaSource::kMask:
        area = static_cast<double>(gt_mask_area[g]);
        break;
    }
    cell.gts[g] = GtItem{inst.id, inst.iscrowd, area};
  }
  cell.dts.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    const auto& det = dets.detections[cell.dt_pos[d]];
    const double area = params.task == EvalTask::kBbox
                            ? det.box.area()
                            : static_cast<double>(dt_mask_area[d]);
    cell.dts[d] = DtItem{det.id, det.score, area};
  }

  for (std::size_t d = 0; d < D; ++d) {
    const auto& det = dets.detections[cell.dt_pos[d]];
    for (std::size_t g = 0; g < G; ++g) {
      const bool crowd = cell.gts[g].crowd;
      double iou = 0.0;
      if (params.task == EvalTask::kBbox) {
        const Box& gb = instances[cell.gt_pos[g]].bbox;
        if (crowd) {
          const double inter = box_intersection(det.box, gb);
          const double da = det.box.area();
          iou = da > 0 ? inter / da : 0.0;
        } else {
          iou = box_iou(det.box, gb);
        }
      } else {
        const MaskOverlap o = serial::mask_overlap(dt_masks[d], gt_masks[g]);
        const std::int64_t denom =
            crowd ? o.area_a : o.area_a + o.area_b - o.intersection;
        if (denom > 0) {
          iou = static_cast<double>(o.intersection) / static_cast<double>(denom);
        } else if (!crowd) {
          // Both masks empty: the shapes are thinner than the pixel grid can
          // resolve, so let their boxes decide. pycocotools scores 0/0 as 0,
          // which makes such an instance unmatchable even against itself.
          iou = box_iou(det.box, instances[cell.gt_pos[g]].bbox);
        }
      }
      cell.ious[d * G + g] = iou;
    }
  }
}

EvalImage evaluate_cell(const Cell& cell, const AreaRange& range,
                        const std::vector<double>& thresholds) {
  EvalImage out;
  const std::size_t G = cell.gts.size();
  const std::size_t D = cell.dts.size();
  if (G == 0 && D == 0) return out;
  out.present = true;

  std::vector<std::uint8_t> gt_ignore(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& gt = cell.gts[g];
    gt_ignore[g] = gt.crowd || gt.area < range.lo || gt.area > range.hi;
  }
  // Non-ignored ground truth first, original order otherwise.
  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gt_ignore[a] < gt_ignore[b];
  });

  const std::size_t T = thresholds.size();
  out.matched.assign(T * D, 0);
  out.ignored.assign(T * D, 0);
  std::vector<std::uint8_t> gt_taken(T * G, 0);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      double best = std::min(thresholds[t], 1.0 - 1e-10);
      long m = -1;
      for (std::size_t k = 0; k < G; ++k) {
        const std::size_t g = order[k];
        if (gt_taken[t * G + k] && !cell.gts[g].crowd) continue;
        if (m > -1 && !gt_ignore[order[m]] && gt_ignore[g]) break;
        const double iou = cell.ious[d * G + g];
        if (iou < best) continue;
        best = iou;
        m = static_cast<long>(k);
      }
      if (m == -1) continue;
      out.ignored[t * D + d] = gt_ignore[order[m]];
      out.matched[t * D + d] = 1;
      gt_taken[t * G + m] = 1;
    }
  }

  for (std::size_t d = 0; d < D; ++d) {
    const bool outside =
        cell.dts[d].area < range.lo || cell.dts[d].area > range.hi;
    if (!outside) continue;
    for (std::size_t t = 0; t < T; ++t) {
      if (!out.matched[t * D + d]) out.ignored[t * D + d] = 1;
    }
  }

  out.scores.reserve(D);
  for (const auto& dt : cell.dts) out.scores.push_back(dt.score);
  for (std::size_t g = 0; g < G; ++g) {
    if (!gt_ignore[g]) ++out.non_ignored_gt;
  }
  return out;
}

// Interpolated precision sampled at the recall points, or empty when the
// category has no non-ignored ground truth in this stratum.
std::vector<std::vector<double>> accumulate(
    const std::vector<const EvalImage*>& images, std::size_t T,
    const std::vector<double>& recall_points) {
  std::vector<double> scores;
  std::vector<std::vector<std::uint8_t>> matched(T);
  std::vector<std::vector<std::uint8_t>> ignored(T);
  std::size_t npig = 0;
  for (const EvalImage* e : images) {
    const std::size_t D = e->scores.size();
    scores.insert(scores.end(), e->scores.begin(), e->scores.end());
    for (std::size_t t = 0; t < T; ++t) {
      matched[t].insert(matched[t].end(), e->matched.begin() + t * D,
                        e->matched.begin() + (t + 1) * D);
      ignored[t].insert(ignored[t].end(), e->ignored.begin() + t * D,
                        e->ignored.begin() + (t + 1) * D);
    }
    npig += e->non_ignored_gt;
  }
  if (npig == 0) return {};

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  const std::size_t R = recall_points.size();
  std::vector<std::vector<double>> precision(T, std::vector<double>(R, 0.0));
  const std::size_t nd = order.size();
  std::vector<double> rc(nd);
  std::vector<double> pr(nd);
  for (std::size_t t = 0; t < T; ++t) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < nd; ++i) {
      const std::size_t j = order[i];
      if (!ignored[t][j]) {
        if (matched[t][j]) {
          tp += 1;
        } else {
          fp += 1;
        }
      }
      rc[i] = tp / static_cast<double>(npig);
      pr[i] = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    }
    for (std::size_t i = nd; i-- > 1;) {
      if (pr[i] > pr[i - 1]) pr[i - 1] = pr[i];
    }
    for (std::size_t r = 0; r < R; ++r) {
      const auto it = std::lower_bound(rc.begin(), rc.end(), recall_points[r]);
      const auto idx = static_cast<std::size_t>(it - rc.begin());
      precision[t][r] = idx < nd ? pr[idx] : 0.0;
    }
  }
  return precision;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EvalResult evaluate(const DetectionSet& dets, const AnnotationDataset& gt,
                    const EvalParams& params) {
  params.check();
  for (const auto& d : dets.detections) {
    if (!gt.find_category(d.category_id)) {
      throw EvalError("detection " + std::to_string(d.id) +
                      " has unknown category " + std::to_string(d.category_id));
    }
    if (!gt.find_image(d.image_id)) {
      throw EvalError("detection " + std::to_string(d.id) +
                      " refers to unknown image " + std::to_string(d.image_id));
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw EvalError("detection " + std::to_string(d.id) +
                      " has score outside [0, 1]");
    }
  }

  // Cells ordered by (category, image) so accumulation concatenates images
  // in ascending id order.
  std::map<std::pair<std::int64_t, std::int64_t>, Cell> by_key;
  const auto& instances = gt.instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto& cell = by_key[{instances[i].category_id, instances[i].image_id}];
    cell.gt_pos.push_back(i);
  }
  for (std::size_t i = 0; i < dets.detections.size(); ++i) {
    const auto& d = dets.detections[i];
    by_key[{d.category_id, d.image_id}].dt_pos.push_back(i);
  }
  std::vector<Cell> cells;
  cells.reserve(by_key.size());
  for (auto& [key, cell] : by_key) {
    cell.category_id = key.first;
    cell.image_id = key.second;
    cells.push_back(std::move(cell));
  }

  const auto n = static_cast<std::int64_t>(cells.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      fill_cell(cells[i], dets, gt, params);
    } catch (...) {
#pragma omp critical(cocoaudit_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> recall_points(params.recall_points);
  for (int r = 0; r < params.recall_points; ++r) {
    recall_points[r] = r / static_cast<double>(params.recall_points - 1);
  }

  const std::size_t T = params.iou_thresholds.size();
  const std::size_t A = params.area_ranges.size();
  std::vector<std::int64_t> cat_ids;
  for (const auto& c : gt.categories()) cat_ids.push_back(c.id);

  // precision[a][k] is T x R, empty when undefined.
  std::vector<std::vector<std::vector<std::vector<double>>>> precision(
      A, std::vector<std::vector<std::vector<double>>>(cat_ids.size()));
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<EvalImage> evals(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      evals[i] = evaluate_cell(cells[i], params.area_ranges[a],
                               params.iou_thresholds);
    }
    std::size_t ci = 0;
    for (std::size_t k = 0; k < cat_ids.size(); ++k) {
      std::vector<const EvalImage*> imgs;
      while (ci < cells.size() && cells[ci].category_id < cat_ids[k]) ++ci;
      while (ci < cells.size() && cells[ci].category_id == cat_ids[k]) {
        if (evals[ci].present) imgs.push_back(&evals[ci]);
        ++ci;
      }
      if (imgs.empty()) continue;
      precision[a][k] = accumulate(imgs, T, recall_points);
    }
  }

  auto summarize_at = [&](std::size_t a, std::optional<std::size_t> only_t) {
    std::vector<double> vals;
    for (const auto& per_cat : precision[a]) {
      if (per_cat.empty()) continue;
      for (std::size_t t = 0; t < T; ++t) {
        if (only_t && *only_t != t) continue;
        vals.insert(vals.end(), per_cat[t].begin(), per_cat[t].end());
      }
    }
    return mean_of(vals);
  };
  auto threshold_index = [&](double v) -> std::optional<std::size_t> {
    for (std::size_t t = 0; t < T; ++t) {
      if (std::abs(params.iou_thresholds[t] - v) < 1e-12) return t;
    }
    return std::nullopt;
  };
  auto area_index = [&](const std::string& label) -> std::optional<std::size_t> {
    for (std::size_t a = 0; a < A; ++a) {
      if (params.area_ranges[a].label == label) return a;
    }
    return std::nullopt;
  };

  EvalResult res;
  res.task = params.task;
  res.map = summarize_at(0, std::nullopt);
  if (auto t = threshold_index(0.5)) res.map50 = summarize_at(0, t);
  if (auto t = threshold_index(0.75)) res.map75 = summarize_at(0, t);
  if (auto a = area_index("small")) res.map_small = summarize_at(*a, std::nullopt);
  if (auto a = area_index("medium")) res.map_medium = summarize_at(*a, std::nullopt);
  if (auto a = area_index("large")) res.map_large = summarize_at(*a, std::nullopt);
  for (std::size_t k = 0; k < cat_ids.size(); ++k) {
    std::vector<double> vals;
    for (const auto& row : precision[0][k]) {
      vals.insert(vals.end(), row.begin(), row.end());
    }
    res.per_category[cat_ids[k]] = mean_of(vals);
  }
  return res;
}

std::vector<CrossTableRow> cross_table(const AnnotationDataset& a,
                                       const AnnotationDataset& b,
                                       const std::vector<EvalTask>& tasks,
                                       const std::string& a_label,
                                       const std::string& b_label,
                                       int max_detections) {
  const DetectionSet from_a = annotations_as_detections(a);
  const DetectionSet from_b = annotations_as_detections(b);
  std::vector<CrossTableRow> rows;
  for (EvalTask task : tasks) {
    EvalParams params = EvalParams::coco(task);
    params.max_detections = max_detections;
    rows.push_back({task, a_label, b_label, evaluate(from_a, b, params)});
    rows.push_back({task, b_label, a_label, evaluate(from_b, a, params)});
  }
  return rows;
}

}  // namespace cocoaudit
