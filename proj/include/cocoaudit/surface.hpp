#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "cocoaudit/dataset.hpp"
#include "cocoaudit/matching.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

// Mean distance from each contour pixel to the other contour, pooled over
// both directions.
double average_surface_distance(const ContourSet& a, const ContourSet& b);

// Symmetric Hausdorff distance between the two contour pixel sets.
double max_surface_distance(const ContourSet& a, const ContourSet& b);

struct SurfaceDistances {
  double d_avg = 0.0;
  double d_max = 0.0;
};

// Both metrics from one pair of distance transforms.
SurfaceDistances surface_distances(const ContourSet& a, const ContourSet& b);

struct SurfaceDistanceResult {
  MatchPair pair;
  double d_avg = 0.0;
  double d_max = 0.0;
  std::size_t contour_len_source = 0;
  std::size_t contour_len_target = 0;

  bool operator==(const SurfaceDistanceResult&) const = default;
};

struct PairMetricsOptions {
  Structuring structuring = Structuring::kCross;
  // Rasterize into a window around both shapes instead of the full image.
  // Produces the same values.
  bool crop = false;
};

// Rasterize, contour, transform and score one matched pair. Throws
// DegenerateShape when either shape covers no pixel centre.
SurfaceDistanceResult pair_metrics(const MatchPair& pair,
                                   const AnnotationDataset& source,
                                   const AnnotationDataset& target,
                                   const PairMetricsOptions& options = {});

struct PairMetricsBatch {
  std::vector<SurfaceDistanceResult> results;  // in pair order
  std::vector<MatchPair> degenerate;
};

PairMetricsBatch pair_metrics_all(const std::vector<MatchPair>& pairs,
                                  const AnnotationDataset& source,
                                  const AnnotationDataset& target,
                                  const PairMetricsOptions& options = {});

void write_result_ndjson(std::ostream& out, const SurfaceDistanceResult& r);

namespace serial {
PairMetricsBatch pair_metrics_all(const std::vector<MatchPair>& pairs,
                                  const AnnotationDataset& source,
                                  const AnnotationDataset& target,
                                  const PairMetricsOptions& options = {});
}  // namespace serial

}  // namespace cocoaudit
