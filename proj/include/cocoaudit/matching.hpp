#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cocoaudit/dataset.hpp"

namespace cocoaudit {

enum class IouMode { kBox, kMask };

// Equal IoUs are ordered by ascending (source id, target id).
enum class TieBreak { kSourceThenTarget };

const char* to_string(IouMode mode);
IouMode iou_mode_from_string(const std::string& s);

struct MatchConfig {
  double iou_threshold = 0.90;  // a pair needs IoU strictly above this
  IouMode iou_mode = IouMode::kBox;
  bool same_category = true;
  TieBreak tie_break = TieBreak::kSourceThenTarget;

  // Throws std::invalid_argument unless the threshold is in (0, 1].
  void check() const;
};

struct MatchPair {
  std::int64_t image_id = 0;
  std::int64_t source_id = 0;
  std::int64_t target_id = 0;
  std::int64_t category_id = 0;
  double iou = 0.0;

  bool operator==(const MatchPair&) const = default;
};

struct MatchSet {
  std::vector<MatchPair> pairs;
  // Eligible instances left without a partner.
  std::vector<std::int64_t> unmatched_source;
  std::vector<std::int64_t> unmatched_target;
  // Crowd and multi-ring instances, never considered.
  std::vector<std::int64_t> ineligible_source;
  std::vector<std::int64_t> ineligible_target;
  MatchConfig config;

  bool same_result(const MatchSet& o) const {
    return pairs == o.pairs && unmatched_source == o.unmatched_source &&
           unmatched_target == o.unmatched_target &&
           ineligible_source == o.ineligible_source &&
           ineligible_target == o.ineligible_target;
  }
};

// Candidate (row, column) with its IoU, input to the greedy assignment.
struct Candidate {
  std::int64_t source_id;
  std::int64_t target_id;
  double iou;
};

// Sorts candidates by descending IoU (ties by ascending ids) and accepts each
// one whose endpoints are both still free and whose IoU exceeds the
// threshold. Returns accepted candidates in acceptance order.
std::vector<Candidate> greedy_assign(std::vector<Candidate> candidates,
                                     double threshold);

struct GridSize {
  int width = 0;
  int height = 0;
};

// Matches instances of one image. Mask mode needs the image size.
MatchSet match_image(std::span<const InstanceRecord* const> source,
                     std::span<const InstanceRecord* const> target,
                     const MatchConfig& cfg,
                     std::optional<GridSize> grid = std::nullopt);

// Per-image matching over the union of both image sets, images run in
// parallel. Output is ordered by (image id, source id).
MatchSet match_datasets(const AnnotationDataset& source,
                        const AnnotationDataset& target,
                        const MatchConfig& cfg);

void write_pairs_ndjson(std::ostream& out, const MatchSet& matches);

namespace serial {
MatchSet match_datasets(const AnnotationDataset& source,
                        const AnnotationDataset& target,
                        const MatchConfig& cfg);
}  // namespace serial

}  // namespace cocoaudit
