#pragma once

#include <cstdint>
#include <variant>
#include <vector>

namespace cocoaudit {

// Axis-aligned box in continuous pixel units, origin top-left.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool operator==(const Box&) const = default;
};

// Flat vertex list [x1, y1, x2, y2, ...].
using Ring = std::vector<double>;

struct PolygonSet {
  std::vector<Ring> rings;

  std::size_t vertex_count() const {
    std::size_t n = 0;
    for (const auto& r : rings) n += r.size() / 2;
    return n;
  }
  bool operator==(const PolygonSet&) const = default;
};

// Column-major run lengths, first run is background.
struct RunLengthMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const RunLengthMask&) const = default;
};

using ShapeSpec = std::variant<PolygonSet, RunLengthMask>;

inline bool is_polygon(const ShapeSpec& s) {
  return std::holds_alternative<PolygonSet>(s);
}

}  // namespace cocoaudit
