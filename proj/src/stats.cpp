#include "cocoaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cocoaudit/errors.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

const char* to_string(SizeBucket b) {
  switch (b) {
    case SizeBucket::kVerySmall: return "very_small";
    case SizeBucket::kSmall: return "small";
    case SizeBucket::kMedium: return "medium";
    case SizeBucket::kLarge: return "large";
  }
  return "unknown";
}

SizeBucket size_bucket(double area) {
  if (!(area >= 0)) throw StatsError("area must be non-negative");
  if (area <= 10.0 * 10.0) return SizeBucket::kVerySmall;
  if (area <= 32.0 * 32.0) return SizeBucket::kSmall;
  if (area <= 96.0 * 96.0) return SizeBucket::kMedium;
  return SizeBucket::kLarge;
}

SizeBucket size_bucket_dims(double w, double h) {
  if (!(w >= 0) || !(h >= 0)) throw StatsError("box sides must be non-negative");
  const double side = std::max(w, h);
  if (side <= 10.0) return SizeBucket::kVerySmall;
  if (side <= 32.0) return SizeBucket::kSmall;
  if (side <= 96.0) return SizeBucket::kMedium;
  return SizeBucket::kLarge;
}

const char* to_string(AreaMode m) {
  return m == AreaMode::kStored ? "stored" : "recomputed";
}

const char* to_string(SizeRule r) {
  return r == SizeRule::kArea ? "area" : "dims";
}

AreaMode area_mode_from_string(const std::string& s) {
  if (s == "stored") return AreaMode::kStored;
  if (s == "recomputed") return AreaMode::kRecomputed;
  throw std::invalid_argument("area mode must be 'stored' or 'recomputed'");
}

SizeRule size_rule_from_string(const std::string& s) {
  if (s == "area") return SizeRule::kArea;
  if (s == "dims") return SizeRule::kDims;
  throw std::invalid_argument("size rule must be 'area' or 'dims'");
}

DatasetSummary& DatasetSummary::operator+=(const DatasetSummary& o) {
  image_count += o.image_count;
  instance_count += o.instance_count;
  crowd_count += o.crowd_count;
  vertex_count += o.vertex_count;
  for (const auto& [id, n] : o.per_category) per_category[id] += n;
  for (const auto& [id, name] : o.category_names) category_names.emplace(id, name);
  for (std::size_t i = 0; i < kBucketCount; ++i) buckets[i] += o.buckets[i];
  return *this;
}

namespace {

double rasterized_area(const InstanceRecord& inst, const ImageRecord& img) {
  try {
    return static_cast<double>(
        rasterize_shape(inst.segmentation, img.width, img.height).count());
  } catch (const GeometryError&) {
    return 0.0;
  }
}

}  // namespace

DatasetSummary summarize(const AnnotationDataset& ds,
                         const SummaryOptions& options) {
  DatasetSummary s;
  s.image_count = ds.images().size();
  for (const auto& cat : ds.categories()) {
    s.per_category[cat.id];
    s.category_names[cat.id] = cat.name;
  }
  for (const auto& inst : ds.instances()) {
    ++s.instance_count;
    ++s.per_category[inst.category_id];
    if (const auto* poly = std::get_if<PolygonSet>(&inst.segmentation)) {
      s.vertex_count += poly->vertex_count();
    }
    if (inst.iscrowd) {
      ++s.crowd_count;
      continue;
    }
    SizeBucket bucket;
    if (options.size_rule == SizeRule::kDims) {
      bucket = size_bucket_dims(inst.bbox.w, inst.bbox.h);
    } else {
      double area = 0.0;
      const ImageRecord* img = ds.find_image(inst.image_id);
      if (options.area_mode == AreaMode::kStored && inst.area) {
        area = *inst.area;
      } else if (img) {
        area = rasterized_area(inst, *img);
      } else {
        area = inst.bbox.area();
      }
      bucket = size_bucket(area);
    }
    ++s.buckets[static_cast<std::size_t>(bucket)];
  }
  return s;
}

DatasetDelta compare(const DatasetSummary& a, const DatasetSummary& b) {
  DatasetDelta d;
  auto count_in = [](const DatasetSummary& s, std::int64_t id) {
    auto it = s.per_category.find(id);
    return it == s.per_category.end() ? std::int64_t{0}
                                      : static_cast<std::int64_t>(it->second);
  };
  for (const auto& [id, n] : a.per_category) d.per_category[id] = 0;
  for (const auto& [id, n] : b.per_category) d.per_category[id] = 0;
  for (auto& [id, delta] : d.per_category) {
    delta = count_in(b, id) - count_in(a, id);
    if (delta > 0) ++d.categories_b_greater;
  }
  for (std::size_t i = 0; i < kBucketCount; ++i) {
    d.buckets[i] = static_cast<std::int64_t>(b.buckets[i]) -
                   static_cast<std::int64_t>(a.buckets[i]);
  }
  auto diff = [](std::size_t x, std::size_t y) {
    return static_cast<std::int64_t>(y) - static_cast<std::int64_t>(x);
  };
  d.images = diff(a.image_count, b.image_count);
  d.instances = diff(a.instance_count, b.instance_count);
  d.crowds = diff(a.crowd_count, b.crowd_count);
  d.vertices = diff(a.vertex_count, b.vertex_count);
  return d;
}

const char* to_string(Metric m) {
  return m == Metric::kAverage ? "d_avg" : "d_max";
}

std::size_t DistanceHistogram::binned() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

DistanceHistogram distance_histogram(std::span<const double> values,
                                     Metric metric, int bins) {
  if (bins < 1) throw StatsError("histogram needs at least one bin");
  if (values.empty()) throw StatsError("no surface distances to histogram");

  DistanceHistogram h;
  h.metric = metric;
  h.total = values.size();

  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (v > 1.0) {
      kept.push_back(v);
    } else {
      ++h.excluded_below_1px;
    }
  }
  if (kept.empty()) {
    throw StatsError("no surface distance exceeds one pixel");
  }

  double sum = 0.0;
  for (double v : kept) sum += v;
  h.mean = sum / static_cast<double>(kept.size());
  double ss = 0.0;
  for (double v : kept) ss += (v - h.mean) * (v - h.mean);
  h.stddev = std::sqrt(ss / static_cast<double>(kept.size()));
  h.clip = h.mean + 3.0 * h.stddev;

  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (h.clip - 1.0) / bins;
  for (int i = 0; i < bins; ++i) h.edges[i] = 1.0 + i * width;
  h.edges.back() = h.clip;
  h.counts.assign(static_cast<std::size_t>(bins), 0);

  for (double v : kept) {
    if (v > h.clip) {
      ++h.overflow;
      continue;
    }
    // First edge >= v closes the bin that holds v.
    auto it = std::lower_bound(h.edges.begin(), h.edges.end(), v);
    auto idx = static_cast<std::size_t>(it - h.edges.begin()) - 1;
    ++h.counts[idx];
  }
  return h;
}

DistanceHistogram distance_histogram(
    std::span<const SurfaceDistanceResult> results, Metric metric, int bins) {
  std::vector<double> values;
  values.reserve(results.size());
  for (const auto& r : results) {
    values.push_back(metric == Metric::kAverage ? r.d_avg : r.d_max);
  }
  return distance_histogram(values, metric, bins);
}

}  // namespace cocoaudit
