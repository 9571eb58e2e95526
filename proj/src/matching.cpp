#include "cocoaudit/matching.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "cocoaudit/errors.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

const char* to_string(IouMode mode) {
  return mode == IouMode::kBox ? "box" : "mask";
}

IouMode iou_mode_from_string(const std::string& s) {
  if (s == "box") return IouMode::kBox;
  if (s == "mask") return IouMode::kMask;
  throw std::invalid_argument("iou mode must be 'box' or 'mask', got '" + s +
                              "'");
}

void MatchConfig::check() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou threshold must be in (0, 1], got " +
                                std::to_string(iou_threshold));
  }
}

std::vector<Candidate> greedy_assign(std::vector<Candidate> candidates,
                                     double threshold) {
  std::erase_if(candidates,
                [&](const Candidate& c) { return !(c.iou > threshold); });
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.source_id != b.source_id) return a.source_id < b.source_id;
              return a.target_id < b.target_id;
            });
  std::unordered_set<std::int64_t> used_source;
  std::unordered_set<std::int64_t> used_target;
  std::vector<Candidate> accepted;
  for (const auto& c : candidates) {
    if (used_source.count(c.source_id) || used_target.count(c.target_id)) {
      continue;
    }
    used_source.insert(c.source_id);
    used_target.insert(c.target_id);
    accepted.push_back(c);
  }
  return accepted;
}

namespace {

bool boxes_touch(const Box& a, const Box& b) {
  return std::min(a.x + a.w, b.x + b.w) > std::max(a.x, b.x) &&
         std::min(a.y + a.h, b.y + b.h) > std::max(a.y, b.y);
}

std::optional<BinaryMask> try_rasterize(const InstanceRecord& inst,
                                        const GridSize& grid) {
  try {
    return rasterize_shape(inst.segmentation, grid.width, grid.height);
  } catch (const GeometryError&) {
    return std::nullopt;
  }
}

MatchSet match_datasets_impl(const AnnotationDataset& source,
                             const AnnotationDataset& target,
                             const MatchConfig& cfg, bool parallel) {
  cfg.check();
  std::set<std::int64_t> ids;
  for (const auto& img : source.images()) ids.insert(img.id);
  for (const auto& img : target.images()) ids.insert(img.id);
  const std::vector<std::int64_t> image_ids(ids.begin(), ids.end());

  std::vector<MatchSet> per_image(image_ids.size());
  const auto n = static_cast<std::int64_t>(image_ids.size());

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t image_id = image_ids[i];
    std::vector<const InstanceRecord*> src;
    std::vector<const InstanceRecord*> tgt;
    for (auto pos : source.instances_of(image_id)) {
      src.push_back(&source.instances()[pos]);
    }
    for (auto pos : target.instances_of(image_id)) {
      tgt.push_back(&target.instances()[pos]);
    }
    std::optional<GridSize> grid;
    const ImageRecord* img = source.find_image(image_id);
    if (!img) img = target.find_image(image_id);
    if (img) grid = GridSize{img->width, img->height};
    per_image[i] = match_image(src, tgt, cfg, grid);
  }

  MatchSet merged;
  merged.config = cfg;
  for (auto& m : per_image) {
    merged.pairs.insert(merged.pairs.end(), m.pairs.begin(), m.pairs.end());
    auto append = [](std::vector<std::int64_t>& dst,
                     const std::vector<std::int64_t>& src) {
      dst.insert(dst.end(), src.begin(), src.end());
    };
    append(merged.unmatched_source, m.unmatched_source);
    append(merged.unmatched_target, m.unmatched_target);
    append(merged.ineligible_source, m.ineligible_source);
    append(merged.ineligible_target, m.ineligible_target);
  }
  std::sort(merged.pairs.begin(), merged.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) {
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.source_id < b.source_id;
            });
  std::sort(merged.unmatched_source.begin(), merged.unmatched_source.end());
  std::sort(merged.unmatched_target.begin(), merged.unmatched_target.end());
  std::sort(merged.ineligible_source.begin(), merged.ineligible_source.end());
  std::sort(merged.ineligible_target.begin(), merged.ineligible_target.end());
  return merged;
}

}  // namespace

MatchSet match_image(std::span<const InstanceRecord* const> source,
                     std::span<const InstanceRecord* const> target,
                     const MatchConfig& cfg, std::optional<GridSize> grid) {
  cfg.check();
  MatchSet result;
  result.config = cfg;

  std::vector<const InstanceRecord*> src;
  std::vector<const InstanceRecord*> tgt;
  for (const auto* inst : source) {
    if (is_single_polygon(*inst)) {
      src.push_back(inst);
    } else {
      result.ineligible_source.push_back(inst->id);
    }
  }
  for (const auto* inst : target) {
    if (is_single_polygon(*inst)) {
      tgt.push_back(inst);
    } else {
      result.ineligible_target.push_back(inst->id);
    }
  }
  std::sort(result.ineligible_source.begin(), result.ineligible_source.end());
  std::sort(result.ineligible_target.begin(), result.ineligible_target.end());

  std::vector<std::optional<BinaryMask>> src_masks;
  std::vector<std::optional<BinaryMask>> tgt_masks;
  std::vector<Box> src_boxes;
  std::vector<Box> tgt_boxes;
  if (cfg.iou_mode == IouMode::kMask) {
    if (!grid) throw GeometryError("mask IoU matching needs the image size");
    for (const auto* s : src) {
      src_masks.push_back(try_rasterize(*s, *grid));
      src_boxes.push_back(src_masks.back() && src_masks.back()->any()
                              ? bbox_of(*src_masks.back())
                              : Box{});
    }
    for (const auto* t : tgt) {
      tgt_masks.push_back(try_rasterize(*t, *grid));
      tgt_boxes.push_back(tgt_masks.back() && tgt_masks.back()->any()
                              ? bbox_of(*tgt_masks.back())
                              : Box{});
    }
  }

  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      if (cfg.same_category && src[i]->category_id != tgt[j]->category_id) {
        continue;
      }
      double iou = 0.0;
      if (cfg.iou_mode == IouMode::kBox) {
        iou = box_iou(src[i]->bbox, tgt[j]->bbox);
      } else {
        if (!src_masks[i] || !tgt_masks[j] ||
            !boxes_touch(src_boxes[i], tgt_boxes[j])) {
          continue;
        }
        iou = mask_iou(*src_masks[i], *tgt_masks[j]);
      }
      if (iou > cfg.iou_threshold) {
        candidates.push_back({src[i]->id, tgt[j]->id, iou});
      }
    }
  }

  const auto accepted = greedy_assign(std::move(candidates), cfg.iou_threshold);
  std::unordered_set<std::int64_t> matched_src;
  std::unordered_set<std::int64_t> matched_tgt;
  std::unordered_map<std::int64_t, const InstanceRecord*> by_id;
  for (const auto* p : src) by_id.emplace(p->id, p);
  for (const auto& c : accepted) {
    const InstanceRecord* s = by_id.at(c.source_id);
    result.pairs.push_back(
        {s->image_id, c.source_id, c.target_id, s->category_id, c.iou});
    matched_src.insert(c.source_id);
    matched_tgt.insert(c.target_id);
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) {
              return a.source_id < b.source_id;
            });
  for (const auto* s : src) {
    if (!matched_src.count(s->id)) result.unmatched_source.push_back(s->id);
  }
  for (const auto* t : tgt) {
    if (!matched_tgt.count(t->id)) result.unmatched_target.push_back(t->id);
  }
  std::sort(result.unmatched_source.begin(), result.unmatched_source.end());
  std::sort(result.unmatched_target.begin(), result.unmatched_target.end());
  return result;
}

MatchSet match_datasets(const AnnotationDataset& source,
                        const AnnotationDataset& target,
                        const MatchConfig& cfg) {
  return match_datasets_impl(source, target, cfg, true);
}

namespace serial {
MatchSet match_datasets(const AnnotationDataset& source,
                        const AnnotationDataset& target,
                        const MatchConfig& cfg) {
  return match_datasets_impl(source, target, cfg, false);
}
}  // namespace serial

void write_pairs_ndjson(std::ostream& out, const MatchSet& matches) {
  for (const auto& p : matches.pairs) {
    nlohmann::ordered_json j;
    j["image_id"] = p.image_id;
    j["source_id"] = p.source_id;
    j["target_id"] = p.target_id;
    j["iou"] = p.iou;
    j["category_id"] = p.category_id;
    out << j.dump() << '\n';
  }
}

}  // namespace cocoaudit
