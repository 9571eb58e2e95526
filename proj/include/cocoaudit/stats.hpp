#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cocoaudit/dataset.hpp"
#include "cocoaudit/surface.hpp"

namespace cocoaudit {

enum class SizeBucket { kVerySmall = 0, kSmall, kMedium, kLarge };
inline constexpr std::size_t kBucketCount = 4;

const char* to_string(SizeBucket b);

// Upper bounds are inclusive: 100, 1024 and 9216 square pixels.
SizeBucket size_bucket(double area);

// Alternative reading of "N x N pixels": both box sides at most N.
SizeBucket size_bucket_dims(double w, double h);

enum class AreaMode { kStored, kRecomputed };
enum class SizeRule { kArea, kDims };

const char* to_string(AreaMode m);
const char* to_string(SizeRule r);
AreaMode area_mode_from_string(const std::string& s);
SizeRule size_rule_from_string(const std::string& s);

struct SummaryOptions {
  AreaMode area_mode = AreaMode::kStored;
  SizeRule size_rule = SizeRule::kArea;
};

struct DatasetSummary {
  std::size_t image_count = 0;
  std::size_t instance_count = 0;
  std::size_t crowd_count = 0;
  std::size_t vertex_count = 0;
  std::map<std::int64_t, std::size_t> per_category;
  std::map<std::int64_t, std::string> category_names;
  // Non-crowd instances only.
  std::array<std::size_t, kBucketCount> buckets{};

  DatasetSummary& operator+=(const DatasetSummary& o);
  bool operator==(const DatasetSummary&) const = default;
};

DatasetSummary summarize(const AnnotationDataset& ds,
                         const SummaryOptions& options = {});

struct DatasetDelta {
  // b minus a, over the union of categories.
  std::map<std::int64_t, std::int64_t> per_category;
  std::size_t categories_b_greater = 0;
  std::array<std::int64_t, kBucketCount> buckets{};
  std::int64_t images = 0;
  std::int64_t instances = 0;
  std::int64_t crowds = 0;
  std::int64_t vertices = 0;
};

DatasetDelta compare(const DatasetSummary& a, const DatasetSummary& b);

enum class Metric { kAverage, kMax };
const char* to_string(Metric m);

struct DistanceHistogram {
  Metric metric = Metric::kAverage;
  std::vector<double> edges;  // bins are (edges[i], edges[i+1]]
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double clip = 0.0;    // mean + 3 stddev
  std::size_t excluded_below_1px = 0;
  std::size_t overflow = 0;  // above clip
  std::size_t total = 0;

  std::size_t binned() const;
  // Values above one pixel, binned or overflowing.
  std::size_t population() const { return binned() + overflow; }
};

inline constexpr int kDefaultBins = 50;

DistanceHistogram distance_histogram(std::span<const double> values,
                                     Metric metric, int bins = kDefaultBins);
DistanceHistogram distance_histogram(
    std::span<const SurfaceDistanceResult> results, Metric metric,
    int bins = kDefaultBins);

}  // namespace cocoaudit
