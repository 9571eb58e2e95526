#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cocoaudit/shapes.hpp"

namespace cocoaudit {

// Row-major boolean grid.
class BinaryMask {
 public:
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value = true) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }
  std::uint8_t* row(int r) {
    return bits_.data() + static_cast<std::size_t>(r) * width_;
  }
  const std::uint8_t* row(int r) const {
    return bits_.data() + static_cast<std::size_t>(r) * width_;
  }

  std::size_t count() const;
  bool any() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

struct Pixel {
  int row = 0;
  int col = 0;

  auto operator<=>(const Pixel&) const = default;
};

// Foreground pixels of a mask boundary, kept in row-major order.
class ContourSet {
 public:
  ContourSet(int width, int height, std::vector<Pixel> pixels = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const Pixel> pixels() const { return pixels_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  bool operator==(const ContourSet&) const = default;

 private:
  int width_;
  int height_;
  std::vector<Pixel> pixels_;
};

// Squared distances are stored as integers so results compare exactly; the
// square root is only taken on read-out.
class DistanceMap {
 public:
  DistanceMap(int width, int height, std::vector<std::int64_t> squared);

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t squared_at(int row, int col) const {
    return squared_[static_cast<std::size_t>(row) * width_ + col];
  }
  double at(int row, int col) const;
  std::span<const std::int64_t> squared() const { return squared_; }

 private:
  int width_;
  int height_;
  std::vector<std::int64_t> squared_;
};

// Sub-grid of an image. Pixel (r, c) of a windowed mask is image pixel
// (r + y0, c + x0).
struct Window {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

enum class Structuring { kCross, kSquare };

// Pixel (r, c) is set iff its center (c + 0.5, r + 0.5) lies inside any ring
// under the even-odd rule. Crossings are half-open in y ([ymin, ymax)) and a
// center exactly on a crossing belongs to the span to its right, which gives
// the top-left fill convention.
BinaryMask rasterize(const PolygonSet& poly, int width, int height);
BinaryMask rasterize(const PolygonSet& poly, const Window& window);

// Polygon or RLE, at the given image size. RLE dims must match.
BinaryMask rasterize_shape(const ShapeSpec& shape, int width, int height);

BinaryMask decode_rle(const RunLengthMask& rle);
RunLengthMask encode_rle(const BinaryMask& mask);

// COCO compressed-string form of the counts list.
std::vector<std::uint32_t> rle_counts_from_string(const std::string& s);
std::string rle_counts_to_string(std::span<const std::uint32_t> counts);

// Out-of-grid neighbours count as background.
BinaryMask erode(const BinaryMask& mask,
                 Structuring se = Structuring::kCross);

// foreground(mask) minus foreground(erode(mask)).
ContourSet contour(const BinaryMask& mask,
                   Structuring se = Structuring::kCross);

// Exact Euclidean distance transform to the nearest contour pixel centre.
// Separable two-pass lower-envelope algorithm, linear per dimension.
DistanceMap edt(const ContourSet& contour);

double box_intersection(const Box& a, const Box& b);
double box_iou(const Box& a, const Box& b);

struct MaskOverlap {
  std::int64_t intersection = 0;
  std::int64_t area_a = 0;
  std::int64_t area_b = 0;
};

MaskOverlap mask_overlap(const BinaryMask& a, const BinaryMask& b);
double mask_iou(const BinaryMask& a, const BinaryMask& b);

Box bbox_of(const BinaryMask& mask);
Box bbox_of(const PolygonSet& poly);

// Reference versions of the OpenMP kernels. Same results, one thread; kept for
// equivalence tests and benchmarks.
namespace serial {
BinaryMask rasterize(const PolygonSet& poly, const Window& window);
BinaryMask erode(const BinaryMask& mask,
                 Structuring se = Structuring::kCross);
DistanceMap edt(const ContourSet& contour);
MaskOverlap mask_overlap(const BinaryMask& a, const BinaryMask& b);
}  // namespace serial

}  // namespace cocoaudit
