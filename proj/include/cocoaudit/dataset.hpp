#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cocoaudit/shapes.hpp"

namespace cocoaudit {

using Json = nlohmann::json;

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  Json extra = Json::object();  // fields this tool does not interpret

  bool operator==(const ImageRecord&) const = default;
};

struct CategoryRecord {
  std::int64_t id = 0;
  std::string name;
  std::optional<std::string> supercategory;
  Json extra = Json::object();

  bool operator==(const CategoryRecord&) const = default;
};

struct InstanceRecord {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  ShapeSpec segmentation;
  Box bbox;
  std::optional<double> area;
  bool iscrowd = false;
  Json extra = Json::object();

  bool operator==(const InstanceRecord&) const = default;
};

struct ParseOptions {
  // Reject duplicate ids and dangling image/category references. Turning this
  // off lets `validate` report such problems as issues instead.
  bool check_integrity = true;
};

// Immutable, indexed COCO corpus. Records are kept sorted by id so that two
// files holding the same records in different order compare equal.
class AnnotationDataset {
 public:
  AnnotationDataset() = default;
  AnnotationDataset(std::vector<ImageRecord> images,
                    std::vector<CategoryRecord> categories,
                    std::vector<InstanceRecord> instances,
                    Json extra = Json::object(),
                    ParseOptions options = {});

  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<CategoryRecord>& categories() const { return categories_; }
  const std::vector<InstanceRecord>& instances() const { return instances_; }
  const Json& extra() const { return extra_; }

  const ImageRecord* find_image(std::int64_t id) const;
  const CategoryRecord* find_category(std::int64_t id) const;
  const InstanceRecord* find_instance(std::int64_t id) const;

  // Positions into instances() for one image; empty for unknown images.
  std::span<const std::size_t> instances_of(std::int64_t image_id) const;

  // image id -> instance positions. Every image has an entry.
  const std::map<std::int64_t, std::vector<std::size_t>>& index() const {
    return index_;
  }

  bool operator==(const AnnotationDataset& other) const {
    return images_ == other.images_ && categories_ == other.categories_ &&
           instances_ == other.instances_ && extra_ == other.extra_;
  }

 private:
  std::vector<ImageRecord> images_;
  std::vector<CategoryRecord> categories_;
  std::vector<InstanceRecord> instances_;
  Json extra_ = Json::object();
  std::map<std::int64_t, std::vector<std::size_t>> index_;
};

AnnotationDataset parse_dataset(std::string_view bytes,
                                const ParseOptions& options = {});
AnnotationDataset load_dataset(const std::filesystem::path& path,
                               const ParseOptions& options = {});

// Segmentation JSON in COCO form (polygon list or {counts, size}).
ShapeSpec parse_segmentation(const Json& j, const std::string& context);
Json segmentation_to_json(const ShapeSpec& shape);

Json to_json(const AnnotationDataset& ds);
std::string serialize_dataset(const AnnotationDataset& ds);

bool is_single_polygon(const InstanceRecord& inst);

// Non-crowd instances whose segmentation is exactly one polygon ring.
std::vector<const InstanceRecord*> single_polygon_view(
    const AnnotationDataset& ds);

enum class IssueKind {
  kDegeneratePolygon,
  kBboxOutsideImage,
  kZeroSizeBbox,
  kAreaMismatch,
  kDuplicateId,
  kDanglingReference,
  kCrowdShapeMismatch,
  kRleSizeMismatch,
  kNegativeCoordinate,
};

const char* to_string(IssueKind kind);

struct Issue {
  IssueKind kind;
  std::int64_t record_id;
  std::string detail;

  bool operator==(const Issue&) const = default;
};

struct ValidateOptions {
  double area_tolerance = 0.10;  // relative, against the rasterized area
  bool check_area = true;
};

std::vector<Issue> validate(const AnnotationDataset& ds,
                            const ValidateOptions& options = {});

}  // namespace cocoaudit
