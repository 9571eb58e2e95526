#include "cocoaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cocoaudit/errors.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

namespace {

const Json& require(const Json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(ctx + ": missing field '" + key + "'");
  }
  return *it;
}

std::int64_t get_int(const Json& obj, const char* key, const std::string& ctx) {
  const Json& v = require(obj, key, ctx);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::isfinite(d)) return static_cast<std::int64_t>(d);
  }
  throw SchemaError(ctx + ": field '" + key + "' must be an integer");
}

double get_number(const Json& v, const std::string& ctx, const char* key) {
  if (!v.is_number()) {
    throw SchemaError(ctx + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string get_string(const Json& obj, const char* key, const std::string& ctx) {
  const Json& v = require(obj, key, ctx);
  if (!v.is_string()) {
    throw SchemaError(ctx + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

Json leftovers(const Json& obj, std::initializer_list<const char*> known) {
  Json extra = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return it.key() == k; })) {
      extra[it.key()] = it.value();
    }
  }
  return extra;
}

const Json& require_array(const Json& root, const char* key) {
  auto it = root.find(key);
  if (it == root.end()) {
    throw SchemaError(std::string("missing top-level key '") + key + "'");
  }
  if (!it->is_array()) {
    throw SchemaError(std::string("top-level key '") + key +
                      "' must be an array");
  }
  return *it;
}

ImageRecord parse_image(const Json& j, std::size_t pos) {
  const std::string where = "image #" + std::to_string(pos);
  if (!j.is_object()) throw SchemaError(where + ": not an object");
  ImageRecord rec;
  rec.id = get_int(j, "id", where);
  const std::string ctx = "image " + std::to_string(rec.id);
  rec.width = static_cast<int>(get_int(j, "width", ctx));
  rec.height = static_cast<int>(get_int(j, "height", ctx));
  if (rec.width < 1 || rec.height < 1) {
    throw SchemaError(ctx + ": width and height must be positive");
  }
  if (j.contains("file_name")) rec.file_name = get_string(j, "file_name", ctx);
  rec.extra = leftovers(j, {"id", "width", "height", "file_name"});
  return rec;
}

CategoryRecord parse_category(const Json& j, std::size_t pos) {
  const std::string where = "category #" + std::to_string(pos);
  if (!j.is_object()) throw SchemaError(where + ": not an object");
  CategoryRecord rec;
  rec.id = get_int(j, "id", where);
  const std::string ctx = "category " + std::to_string(rec.id);
  rec.name = get_string(j, "name", ctx);
  if (rec.name.empty()) throw SchemaError(ctx + ": name is empty");
  if (j.contains("supercategory") && !j["supercategory"].is_null()) {
    rec.supercategory = get_string(j, "supercategory", ctx);
  }
  rec.extra = leftovers(j, {"id", "name", "supercategory"});
  return rec;
}

Box parse_box(const Json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 4) {
    throw SchemaError(ctx + ": bbox must be [x, y, w, h]");
  }
  Box b{get_number(v[0], ctx, "bbox"), get_number(v[1], ctx, "bbox"),
        get_number(v[2], ctx, "bbox"), get_number(v[3], ctx, "bbox")};
  if (b.w < 0 || b.h < 0) {
    throw SchemaError(ctx + ": bbox has negative extent");
  }
  return b;
}

InstanceRecord parse_instance(const Json& j, std::size_t pos) {
  const std::string where = "annotation #" + std::to_string(pos);
  if (!j.is_object()) throw SchemaError(where + ": not an object");
  InstanceRecord rec;
  rec.id = get_int(j, "id", where);
  const std::string ctx = "annotation " + std::to_string(rec.id);
  rec.image_id = get_int(j, "image_id", ctx);
  rec.category_id = get_int(j, "category_id", ctx);
  rec.segmentation = parse_segmentation(require(j, "segmentation", ctx), ctx);
  rec.bbox = parse_box(require(j, "bbox", ctx), ctx);
  if (j.contains("area") && !j["area"].is_null()) {
    rec.area = get_number(j["area"], ctx, "area");
    if (*rec.area < 0) throw SchemaError(ctx + ": area is negative");
  }
  if (j.contains("iscrowd")) {
    const Json& c = j["iscrowd"];
    if (c.is_boolean()) {
      rec.iscrowd = c.get<bool>();
    } else if (c.is_number_integer()) {
      rec.iscrowd = c.get<std::int64_t>() != 0;
    } else {
      throw SchemaError(ctx + ": field 'iscrowd' must be 0/1");
    }
  }
  rec.extra = leftovers(j, {"id", "image_id", "category_id", "segmentation",
                            "bbox", "area", "iscrowd"});
  return rec;
}

template <typename Rec>
void sort_by_id(std::vector<Rec>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const Rec& a, const Rec& b) { return a.id < b.id; });
}

template <typename Rec>
const Rec* find_by_id(const std::vector<Rec>& v, std::int64_t id) {
  auto it = std::lower_bound(
      v.begin(), v.end(), id,
      [](const Rec& r, std::int64_t key) { return r.id < key; });
  return (it != v.end() && it->id == id) ? &*it : nullptr;
}

template <typename Rec>
const Rec* first_duplicate(const std::vector<Rec>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].id == v[i - 1].id) return &v[i];
  }
  return nullptr;
}

}  // namespace

ShapeSpec parse_segmentation(const Json& j, const std::string& ctx) {
  if (j.is_array()) {
    PolygonSet poly;
    for (const auto& ring_json : j) {
      if (!ring_json.is_array()) {
        throw SchemaError(ctx + ": polygon ring must be an array");
      }
      Ring ring;
      ring.reserve(ring_json.size());
      for (const auto& v : ring_json) {
        const double x = get_number(v, ctx, "segmentation");
        if (!std::isfinite(x)) {
          throw SchemaError(ctx + ": non-finite polygon coordinate");
        }
        ring.push_back(x);
      }
      if (ring.size() % 2 != 0) {
        throw SchemaError(ctx + ": polygon ring has an odd coordinate count");
      }
      poly.rings.push_back(std::move(ring));
    }
    return poly;
  }
  if (j.is_object()) {
    RunLengthMask rle;
    const Json& size = require(j, "size", ctx);
    if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
        !size[1].is_number_integer()) {
      throw SchemaError(ctx + ": RLE size must be [height, width]");
    }
    rle.height = size[0].get<int>();
    rle.width = size[1].get<int>();
    if (rle.height < 1 || rle.width < 1) {
      throw SchemaError(ctx + ": RLE size must be positive");
    }
    const Json& counts = require(j, "counts", ctx);
    if (counts.is_string()) {
      rle.counts = rle_counts_from_string(counts.get<std::string>());
    } else if (counts.is_array()) {
      rle.counts.reserve(counts.size());
      for (const auto& c : counts) {
        if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
          throw SchemaError(ctx + ": RLE counts must be non-negative integers");
        }
        rle.counts.push_back(c.get<std::uint32_t>());
      }
    } else {
      throw SchemaError(ctx + ": RLE counts must be a list or string");
    }
    std::uint64_t sum = 0;
    for (auto c : rle.counts) sum += c;
    if (sum != static_cast<std::uint64_t>(rle.height) * rle.width) {
      throw SchemaError(ctx + ": RLE counts sum to " + std::to_string(sum) +
                        ", expected " +
                        std::to_string(static_cast<std::uint64_t>(rle.height) *
                                       rle.width));
    }
    return rle;
  }
  throw SchemaError(ctx + ": segmentation must be a polygon list or RLE object");
}

Json segmentation_to_json(const ShapeSpec& shape) {
  if (const auto* poly = std::get_if<PolygonSet>(&shape)) {
    Json rings = Json::array();
    for (const auto& r : poly->rings) rings.push_back(r);
    return rings;
  }
  const auto& rle = std::get<RunLengthMask>(shape);
  return Json{{"counts", rle.counts}, {"size", {rle.height, rle.width}}};
}

AnnotationDataset::AnnotationDataset(std::vector<ImageRecord> images,
                                     std::vector<CategoryRecord> categories,
                                     std::vector<InstanceRecord> instances,
                                     Json extra, ParseOptions options)
    : images_(std::move(images)),
      categories_(std::move(categories)),
      instances_(std::move(instances)),
      extra_(std::move(extra)) {
  sort_by_id(images_);
  sort_by_id(categories_);
  sort_by_id(instances_);

  if (options.check_integrity) {
    if (const auto* d = first_duplicate(images_)) {
      throw IntegrityError("duplicate image id " + std::to_string(d->id));
    }
    if (const auto* d = first_duplicate(categories_)) {
      throw IntegrityError("duplicate category id " + std::to_string(d->id));
    }
    if (const auto* d = first_duplicate(instances_)) {
      throw IntegrityError("duplicate annotation id " + std::to_string(d->id));
    }
    for (const auto& inst : instances_) {
      if (!find_image(inst.image_id)) {
        throw IntegrityError("annotation " + std::to_string(inst.id) +
                             " → image " + std::to_string(inst.image_id));
      }
      if (!find_category(inst.category_id)) {
        throw IntegrityError("annotation " + std::to_string(inst.id) +
                             " → category " +
                             std::to_string(inst.category_id));
      }
    }
  }

  for (const auto& img : images_) index_[img.id];
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    auto it = index_.find(instances_[i].image_id);
    if (it != index_.end()) it->second.push_back(i);
  }
}

const ImageRecord* AnnotationDataset::find_image(std::int64_t id) const {
  return find_by_id(images_, id);
}

const CategoryRecord* AnnotationDataset::find_category(std::int64_t id) const {
  return find_by_id(categories_, id);
}

const InstanceRecord* AnnotationDataset::find_instance(std::int64_t id) const {
  return find_by_id(instances_, id);
}

std::span<const std::size_t> AnnotationDataset::instances_of(
    std::int64_t image_id) const {
  auto it = index_.find(image_id);
  if (it == index_.end()) return {};
  return it->second;
}

AnnotationDataset parse_dataset(std::string_view bytes,
                                const ParseOptions& options) {
  Json root;
  try {
    root = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(e.byte, e.what());
  }
  if (!root.is_object()) throw SchemaError("top level must be a JSON object");

  const Json& images_json = require_array(root, "images");
  const Json& ann_json = require_array(root, "annotations");
  const Json& cat_json = require_array(root, "categories");

  std::vector<ImageRecord> images;
  images.reserve(images_json.size());
  for (std::size_t i = 0; i < images_json.size(); ++i) {
    images.push_back(parse_image(images_json[i], i));
  }
  std::vector<CategoryRecord> categories;
  categories.reserve(cat_json.size());
  for (std::size_t i = 0; i < cat_json.size(); ++i) {
    categories.push_back(parse_category(cat_json[i], i));
  }
  std::vector<InstanceRecord> instances;
  instances.reserve(ann_json.size());
  for (std::size_t i = 0; i < ann_json.size(); ++i) {
    instances.push_back(parse_instance(ann_json[i], i));
  }
  return AnnotationDataset(std::move(images), std::move(categories),
                           std::move(instances),
                           leftovers(root, {"images", "annotations", "categories"}),
                           options);
}

AnnotationDataset load_dataset(const std::filesystem::path& path,
                               const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), options);
}

Json to_json(const AnnotationDataset& ds) {
  Json root = ds.extra();
  Json images = Json::array();
  for (const auto& img : ds.images()) {
    Json j = img.extra;
    j["id"] = img.id;
    j["width"] = img.width;
    j["height"] = img.height;
    j["file_name"] = img.file_name;
    images.push_back(std::move(j));
  }
  Json categories = Json::array();
  for (const auto& cat : ds.categories()) {
    Json j = cat.extra;
    j["id"] = cat.id;
    j["name"] = cat.name;
    if (cat.supercategory) j["supercategory"] = *cat.supercategory;
    categories.push_back(std::move(j));
  }
  Json annotations = Json::array();
  for (const auto& inst : ds.instances()) {
    Json j = inst.extra;
    j["id"] = inst.id;
    j["image_id"] = inst.image_id;
    j["category_id"] = inst.category_id;
    j["segmentation"] = segmentation_to_json(inst.segmentation);
    j["bbox"] = {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h};
    if (inst.area) j["area"] = *inst.area;
    j["iscrowd"] = inst.iscrowd ? 1 : 0;
    annotations.push_back(std::move(j));
  }
  root["images"] = std::move(images);
  root["categories"] = std::move(categories);
  root["annotations"] = std::move(annotations);
  return root;
}

std::string serialize_dataset(const AnnotationDataset& ds) {
  return to_json(ds).dump();
}

bool is_single_polygon(const InstanceRecord& inst) {
  if (inst.iscrowd) return false;
  const auto* poly = std::get_if<PolygonSet>(&inst.segmentation);
  return poly && poly->rings.size() == 1;
}

std::vector<const InstanceRecord*> single_polygon_view(
    const AnnotationDataset& ds) {
  std::vector<const InstanceRecord*> out;
  for (const auto& inst : ds.instances()) {
    if (is_single_polygon(inst)) out.push_back(&inst);
  }
  return out;
}

const char* to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::kDegeneratePolygon: return "DegeneratePolygon";
    case IssueKind::kBboxOutsideImage: return "BboxOutsideImage";
    case IssueKind::kZeroSizeBbox: return "ZeroSizeBbox";
    case IssueKind::kAreaMismatch: return "AreaMismatch";
    case IssueKind::kDuplicateId: return "DuplicateId";
    case IssueKind::kDanglingReference: return "DanglingReference";
    case IssueKind::kCrowdShapeMismatch: return "CrowdShapeMismatch";
    case IssueKind::kRleSizeMismatch: return "RleSizeMismatch";
    case IssueKind::kNegativeCoordinate: return "NegativeCoordinate";
  }
  return "Unknown";
}

std::vector<Issue> validate(const AnnotationDataset& ds,
                            const ValidateOptions& options) {
  std::vector<Issue> issues;
  auto dup_scan = [&](const auto& records, const char* what) {
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].id == records[i - 1].id) {
        issues.push_back({IssueKind::kDuplicateId, records[i].id,
                          std::string("duplicate ") + what + " id"});
      }
    }
  };
  dup_scan(ds.images(), "image");
  dup_scan(ds.categories(), "category");
  dup_scan(ds.instances(), "annotation");

  for (const auto& inst : ds.instances()) {
    const ImageRecord* img = ds.find_image(inst.image_id);
    if (!img) {
      issues.push_back({IssueKind::kDanglingReference, inst.id,
                        "image " + std::to_string(inst.image_id)});
    }
    if (!ds.find_category(inst.category_id)) {
      issues.push_back({IssueKind::kDanglingReference, inst.id,
                        "category " + std::to_string(inst.category_id)});
    }

    bool rasterizable = true;
    if (const auto* poly = std::get_if<PolygonSet>(&inst.segmentation)) {
      if (poly->rings.empty()) {
        issues.push_back({IssueKind::kDegeneratePolygon, inst.id, "no rings"});
        rasterizable = false;
      }
      for (std::size_t r = 0; r < poly->rings.size(); ++r) {
        if (poly->rings[r].size() < 6) {
          issues.push_back({IssueKind::kDegeneratePolygon, inst.id,
                            "ring " + std::to_string(r) + " has " +
                                std::to_string(poly->rings[r].size() / 2) +
                                " vertices"});
          rasterizable = false;
        }
        for (double v : poly->rings[r]) {
          if (v < 0) {
            issues.push_back({IssueKind::kNegativeCoordinate, inst.id,
                              "negative polygon coordinate"});
            break;
          }
        }
      }
      if (inst.iscrowd) {
        issues.push_back({IssueKind::kCrowdShapeMismatch, inst.id,
                          "crowd instance stored as polygons"});
      }
    } else {
      const auto& rle = std::get<RunLengthMask>(inst.segmentation);
      if (img && (rle.width != img->width || rle.height != img->height)) {
        issues.push_back({IssueKind::kRleSizeMismatch, inst.id,
                          "RLE size differs from image size"});
        rasterizable = false;
      }
      if (!inst.iscrowd) {
        issues.push_back({IssueKind::kCrowdShapeMismatch, inst.id,
                          "non-crowd instance stored as RLE"});
      }
    }

    if (inst.bbox.w <= 0 || inst.bbox.h <= 0) {
      issues.push_back({IssueKind::kZeroSizeBbox, inst.id, "zero-size bbox"});
    }
    if (img) {
      const auto& b = inst.bbox;
      if (b.x < 0 || b.y < 0 || b.x + b.w > img->width ||
          b.y + b.h > img->height) {
        issues.push_back({IssueKind::kBboxOutsideImage, inst.id,
                          "bbox exceeds image bounds"});
      }
    }

    if (options.check_area && inst.area && img && rasterizable) {
      const auto pixels = static_cast<double>(
          rasterize_shape(inst.segmentation, img->width, img->height).count());
      const double stored = *inst.area;
      const bool mismatch =
          pixels > 0 ? std::abs(stored - pixels) > options.area_tolerance * pixels
                     : stored > 0;
      if (mismatch) {
        std::ostringstream msg;
        msg << "stored area " << stored << " vs rasterized " << pixels;
        issues.push_back({IssueKind::kAreaMismatch, inst.id, msg.str()});
      }
    }
  }
  return issues;
}

}  // namespace cocoaudit
