#include "cocoaudit/surface.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>

#include "cocoaudit/errors.hpp"

namespace cocoaudit {

namespace {

void check_pair(const ContourSet& a, const ContourSet& b) {
  if (a.empty() || b.empty()) {
    throw GeometryError("surface distance needs two non-empty contours");
  }
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryError("contours live on different grids");
  }
}

struct Directed {
  double sum = 0.0;
  std::int64_t max_squared = 0;
};

// Distances from every pixel of `from` looked up in the transform of the
// other contour, accumulated in row-major order.
Directed directed(const ContourSet& from, const DistanceMap& to) {
  Directed d;
  for (const auto& p : from.pixels()) {
    const std::int64_t sq = to.squared_at(p.row, p.col);
    d.sum += std::sqrt(static_cast<double>(sq));
    d.max_squared = std::max(d.max_squared, sq);
  }
  return d;
}

Window crop_window(const PolygonSet& a, const PolygonSet& b, int width,
                   int height) {
  const Box ba = bbox_of(a);
  const Box bb = bbox_of(b);
  const double xmin = std::min(ba.x, bb.x);
  const double ymin = std::min(ba.y, bb.y);
  const double xmax = std::max(ba.x + ba.w, bb.x + bb.w);
  const double ymax = std::max(ba.y + ba.h, bb.y + bb.h);
  // One pixel of background margin keeps erosion identical to the full grid.
  const double x0 = std::clamp(std::floor(xmin) - 1.0, 0.0, double(width));
  const double y0 = std::clamp(std::floor(ymin) - 1.0, 0.0, double(height));
  const double x1 = std::clamp(std::ceil(xmax) + 1.0, 0.0, double(width));
  const double y1 = std::clamp(std::ceil(ymax) + 1.0, 0.0, double(height));
  return Window{static_cast<int>(x0), static_cast<int>(y0),
                static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
}

BinaryMask shape_mask(const ShapeSpec& shape, const Window& window, int width,
                      int height, bool crop) {
  if (crop) {
    if (const auto* poly = std::get_if<PolygonSet>(&shape)) {
      return rasterize(*poly, window);
    }
  }
  return rasterize_shape(shape, width, height);
}

PairMetricsBatch batch_impl(const std::vector<MatchPair>& pairs,
                            const AnnotationDataset& source,
                            const AnnotationDataset& target,
                            const PairMetricsOptions& options, bool parallel) {
  const auto n = static_cast<std::int64_t>(pairs.size());
  std::vector<std::optional<SurfaceDistanceResult>> slots(pairs.size());
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 4) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      slots[i] = pair_metrics(pairs[i], source, target, options);
    } catch (const DegenerateShape&) {
      // left empty, tallied below
    } catch (...) {
#pragma omp critical(cocoaudit_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  PairMetricsBatch batch;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      batch.results.push_back(*slots[i]);
    } else {
      batch.degenerate.push_back(pairs[i]);
    }
  }
  return batch;
}

}  // namespace

SurfaceDistances surface_distances(const ContourSet& a, const ContourSet& b) {
  check_pair(a, b);
  const DistanceMap da = edt(a);
  const DistanceMap db = edt(b);
  const Directed ab = directed(a, db);
  const Directed ba = directed(b, da);
  SurfaceDistances out;
  out.d_avg = (ab.sum + ba.sum) / static_cast<double>(a.size() + b.size());
  out.d_max = std::sqrt(
      static_cast<double>(std::max(ab.max_squared, ba.max_squared)));
  return out;
}

double average_surface_distance(const ContourSet& a, const ContourSet& b) {
  return surface_distances(a, b).d_avg;
}

double max_surface_distance(const ContourSet& a, const ContourSet& b) {
  return surface_distances(a, b).d_max;
}

SurfaceDistanceResult pair_metrics(const MatchPair& pair,
                                   const AnnotationDataset& source,
                                   const AnnotationDataset& target,
                                   const PairMetricsOptions& options) {
  const InstanceRecord* s = source.find_instance(pair.source_id);
  const InstanceRecord* t = target.find_instance(pair.target_id);
  if (!s || !t) {
    throw Error("pair " + std::to_string(pair.source_id) + "/" +
                std::to_string(pair.target_id) + " does not resolve");
  }
  const ImageRecord* img = source.find_image(pair.image_id);
  if (!img) img = target.find_image(pair.image_id);
  if (!img) throw Error("image " + std::to_string(pair.image_id) + " unknown");

  std::optional<BinaryMask> ms;
  std::optional<BinaryMask> mt;
  try {
    Window window{0, 0, img->width, img->height};
    const auto* ps = std::get_if<PolygonSet>(&s->segmentation);
    const auto* pt = std::get_if<PolygonSet>(&t->segmentation);
    const bool crop = options.crop && ps && pt;
    if (crop) {
      window = crop_window(*ps, *pt, img->width, img->height);
      if (window.width < 1 || window.height < 1) {
        throw DegenerateShape("pair lies outside the image");
      }
    }
    ms = shape_mask(s->segmentation, window, img->width, img->height, crop);
    mt = shape_mask(t->segmentation, window, img->width, img->height, crop);
  } catch (const DegenerateShape&) {
    throw;
  } catch (const GeometryError& e) {
    throw DegenerateShape(e.what());
  }
  if (!ms->any() || !mt->any()) {
    throw DegenerateShape("instance " +
                          std::to_string(ms->any() ? pair.target_id
                                                   : pair.source_id) +
                          " rasterizes to no pixels");
  }

  const ContourSet cs = contour(*ms, options.structuring);
  const ContourSet ct = contour(*mt, options.structuring);
  const SurfaceDistances d = surface_distances(cs, ct);
  return SurfaceDistanceResult{pair, d.d_avg, d.d_max, cs.size(), ct.size()};
}

PairMetricsBatch pair_metrics_all(const std::vector<MatchPair>& pairs,
                                  const AnnotationDataset& source,
                                  const AnnotationDataset& target,
                                  const PairMetricsOptions& options) {
  return batch_impl(pairs, source, target, options, true);
}

namespace serial {
PairMetricsBatch pair_metrics_all(const std::vector<MatchPair>& pairs,
                                  const AnnotationDataset& source,
                                  const AnnotationDataset& target,
                                  const PairMetricsOptions& options) {
  return batch_impl(pairs, source, target, options, false);
}
}  // namespace serial

void write_result_ndjson(std::ostream& out, const SurfaceDistanceResult& r) {
  nlohmann::ordered_json j;
  j["image_id"] = r.pair.image_id;
  j["source_id"] = r.pair.source_id;
  j["target_id"] = r.pair.target_id;
  j["iou"] = r.pair.iou;
  j["category_id"] = r.pair.category_id;
  j["d_avg"] = r.d_avg;
  j["d_max"] = r.d_max;
  j["contour_len_source"] = r.contour_len_source;
  j["contour_len_target"] = r.contour_len_target;
  out << j.dump() << '\n';
}

}  // namespace cocoaudit
