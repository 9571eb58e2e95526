#include "cocoaudit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cocoaudit/errors.hpp"

namespace cocoaudit {

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw GeometryError("mask dimensions must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

bool BinaryMask::any() const {
  return std::find(bits_.begin(), bits_.end(), 1) != bits_.end();
}

ContourSet::ContourSet(int width, int height, std::vector<Pixel> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  for (const auto& p : pixels_) {
    if (p.row < 0 || p.row >= height_ || p.col < 0 || p.col >= width_) {
      throw GeometryError("contour pixel outside grid");
    }
  }
  std::sort(pixels_.begin(), pixels_.end());
  pixels_.erase(std::unique(pixels_.begin(), pixels_.end()), pixels_.end());
}

DistanceMap::DistanceMap(int width, int height,
                         std::vector<std::int64_t> squared)
    : width_(width), height_(height), squared_(std::move(squared)) {}

double DistanceMap::at(int row, int col) const {
  return std::sqrt(static_cast<double>(squared_at(row, col)));
}

namespace {

// Work below this many pixels runs on the calling thread.
constexpr std::size_t kParallelCutoff = 1 << 14;

void check_ring(const Ring& ring) {
  if (ring.size() < 6 || ring.size() % 2 != 0) {
    throw GeometryError("polygon ring needs at least 3 vertices, got " +
                        std::to_string(ring.size() / 2));
  }
  for (double v : ring) {
    if (!std::isfinite(v)) throw GeometryError("non-finite polygon vertex");
  }
}

// Smallest integer c with c + 0.5 >= x, clamped to [lo, hi].
long long first_center_at_or_after(double x, long long lo, long long hi) {
  if (!(x > static_cast<double>(lo) + 0.5)) return lo;
  if (x > static_cast<double>(hi) + 0.5) return hi;
  auto c = static_cast<long long>(std::ceil(x - 0.5));
  while (c > lo && static_cast<double>(c - 1) + 0.5 >= x) --c;
  while (c < hi && static_cast<double>(c) + 0.5 < x) ++c;
  return c;
}

// Crossings of one ring with the horizontal line through y, edges oriented
// upward so the same expression is evaluated whatever the vertex order.
void ring_crossings(const Ring& ring, double y, std::vector<double>& xs) {
  const std::size_t n = ring.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    double xa = ring[2 * i], ya = ring[2 * i + 1];
    double xb = ring[2 * j], yb = ring[2 * j + 1];
    if (ya == yb) continue;
    if (ya > yb) {
      std::swap(xa, xb);
      std::swap(ya, yb);
    }
    if (ya <= y && y < yb) {
      xs.push_back(xa + (y - ya) * (xb - xa) / (yb - ya));
    }
  }
}

BinaryMask rasterize_impl(const PolygonSet& poly, const Window& window,
                          bool parallel) {
  for (const auto& ring : poly.rings) check_ring(ring);
  BinaryMask mask(window.width, window.height);
  const long long col_lo = window.x0;
  const long long col_hi = static_cast<long long>(window.x0) + window.width;
  const bool go_parallel =
      parallel && mask.size() * std::max<std::size_t>(1, poly.vertex_count()) /
                          64 >=
                      kParallelCutoff;

#pragma omp parallel if (go_parallel)
  {
    std::vector<double> xs;
#pragma omp for schedule(static)
    for (int r = 0; r < window.height; ++r) {
      const double y = static_cast<double>(r + window.y0) + 0.5;
      std::uint8_t* row = mask.row(r);
      for (const auto& ring : poly.rings) {
        xs.clear();
        ring_crossings(ring, y, xs);
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
          const long long begin = first_center_at_or_after(xs[k], col_lo, col_hi);
          const long long end =
              first_center_at_or_after(xs[k + 1], col_lo, col_hi);
          for (long long c = begin; c < end; ++c) row[c - col_lo] = 1;
        }
      }
    }
  }
  return mask;
}

BinaryMask erode_impl(const BinaryMask& mask, Structuring se, bool parallel) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h);
  const bool square = se == Structuring::kSquare;
  const bool go_parallel = parallel && mask.size() >= kParallelCutoff;

#pragma omp parallel for schedule(static) if (go_parallel)
  for (int r = 0; r < h; ++r) {
    const std::uint8_t* cur = mask.row(r);
    const std::uint8_t* up = r > 0 ? mask.row(r - 1) : nullptr;
    const std::uint8_t* down = r + 1 < h ? mask.row(r + 1) : nullptr;
    std::uint8_t* dst = out.row(r);
    for (int c = 0; c < w; ++c) {
      if (!cur[c] || !up || !down || c == 0 || c + 1 == w) continue;
      bool keep = up[c] && down[c] && cur[c - 1] && cur[c + 1];
      if (keep && square) {
        keep = up[c - 1] && up[c + 1] && down[c - 1] && down[c + 1];
      }
      dst[c] = keep ? 1 : 0;
    }
  }
  return out;
}

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Breakpoint between two parabolas, num / den with den > 0.
struct Breakpoint {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

bool less_equal(const Breakpoint& a, const Breakpoint& b) {
  return static_cast<__int128>(a.num) * b.den <=
         static_cast<__int128>(b.num) * a.den;
}

// Lower envelope of parabolas rooted at the finite samples of f.
void envelope_1d(const std::int64_t* f, int n, std::int64_t* out,
                 std::vector<int>& sites, std::vector<Breakpoint>& bounds) {
  sites.resize(n);
  bounds.resize(n);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kInf) continue;
    Breakpoint s;
    while (k >= 0) {
      const int p = sites[k];
      s.num = (f[q] + static_cast<std::int64_t>(q) * q) -
              (f[p] + static_cast<std::int64_t>(p) * p);
      s.den = 2 * static_cast<std::int64_t>(q - p);
      if (k > 0 && less_equal(s, bounds[k])) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    sites[k] = q;
    bounds[k] = s;
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (j < k && static_cast<__int128>(bounds[j + 1].num) <
                        static_cast<__int128>(q) * bounds[j + 1].den) {
      ++j;
    }
    const std::int64_t d = q - sites[j];
    out[q] = f[sites[j]] + d * d;
  }
}

DistanceMap edt_impl(const ContourSet& contour, bool parallel) {
  if (contour.empty()) {
    throw GeometryError("distance transform of an empty contour is undefined");
  }
  const int w = contour.width();
  const int h = contour.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const bool go_parallel = parallel && n >= kParallelCutoff;

  std::vector<std::uint8_t> seed(n, 0);
  for (const auto& p : contour.pixels()) {
    seed[static_cast<std::size_t>(p.row) * w + p.col] = 1;
  }

  // Pass 1: squared distance to the nearest seed in the same column.
  std::vector<std::int64_t> column(n, kInf);
#pragma omp parallel for schedule(static) if (go_parallel)
  for (int c = 0; c < w; ++c) {
    std::int64_t d = kInf;
    for (int r = 0; r < h; ++r) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      d = seed[i] ? 0 : (d == kInf ? kInf : d + 1);
      column[i] = d;
    }
    d = kInf;
    for (int r = h - 1; r >= 0; --r) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      d = seed[i] ? 0 : (d == kInf ? kInf : d + 1);
      column[i] = std::min(column[i], d);
    }
    for (int r = 0; r < h; ++r) {
      std::int64_t& v = column[static_cast<std::size_t>(r) * w + c];
      if (v != kInf) v *= v;
    }
  }

  // Pass 2: lower envelope along each row.
  std::vector<std::int64_t> squared(n);
#pragma omp parallel if (go_parallel)
  {
    std::vector<int> sites;
    std::vector<Breakpoint> bounds;
#pragma omp for schedule(static)
    for (int r = 0; r < h; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * w;
      envelope_1d(column.data() + off, w, squared.data() + off, sites, bounds);
    }
  }
  return DistanceMap(w, h, std::move(squared));
}

MaskOverlap overlap_impl(const BinaryMask& a, const BinaryMask& b,
                         bool parallel) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryError("mask dimensions differ");
  }
  const auto abits = a.bits();
  const auto bbits = b.bits();
  const auto n = static_cast<std::int64_t>(abits.size());
  std::int64_t inter = 0, area_a = 0, area_b = 0;
  const bool go_parallel = parallel && abits.size() >= kParallelCutoff;
#pragma omp parallel for reduction(+ : inter, area_a, area_b) \
    schedule(static) if (go_parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const int x = abits[i];
    const int y = bbits[i];
    inter += x & y;
    area_a += x;
    area_b += y;
  }
  return {inter, area_a, area_b};
}

}  // namespace

BinaryMask rasterize(const PolygonSet& poly, int width, int height) {
  return rasterize_impl(poly, Window{0, 0, width, height}, true);
}

BinaryMask rasterize(const PolygonSet& poly, const Window& window) {
  return rasterize_impl(poly, window, true);
}

BinaryMask rasterize_shape(const ShapeSpec& shape, int width, int height) {
  if (const auto* poly = std::get_if<PolygonSet>(&shape)) {
    return rasterize(*poly, width, height);
  }
  const auto& rle = std::get<RunLengthMask>(shape);
  if (rle.width != width || rle.height != height) {
    throw GeometryError("RLE size " + std::to_string(rle.height) + "x" +
                        std::to_string(rle.width) + " does not match image " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
  return decode_rle(rle);
}

BinaryMask erode(const BinaryMask& mask, Structuring se) {
  return erode_impl(mask, se, true);
}

ContourSet contour(const BinaryMask& mask, Structuring se) {
  const BinaryMask inner = erode(mask, se);
  std::vector<Pixel> pixels;
  for (int r = 0; r < mask.height(); ++r) {
    const std::uint8_t* m = mask.row(r);
    const std::uint8_t* e = inner.row(r);
    for (int c = 0; c < mask.width(); ++c) {
      if (m[c] && !e[c]) pixels.push_back({r, c});
    }
  }
  return ContourSet(mask.width(), mask.height(), std::move(pixels));
}

DistanceMap edt(const ContourSet& contour) { return edt_impl(contour, true); }

namespace {

// Overlap of [a0, a0 + aw) and [b0, b0 + bw). Nested intervals return the
// inner length itself, so identical boxes come out at exactly IoU 1.
double overlap_1d(double a0, double aw, double b0, double bw) {
  const double a1 = a0 + aw, b1 = b0 + bw;
  if (a0 >= b0 && a1 <= b1) return aw;
  if (b0 >= a0 && b1 <= a1) return bw;
  return std::min(a1, b1) - std::max(a0, b0);
}

}  // namespace

double box_intersection(const Box& a, const Box& b) {
  const double iw = overlap_1d(a.x, a.w, b.x, b.w);
  const double ih = overlap_1d(a.y, a.h, b.y, b.h);
  return (iw > 0 && ih > 0) ? iw * ih : 0.0;
}

double box_iou(const Box& a, const Box& b) {
  const double inter = box_intersection(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

MaskOverlap mask_overlap(const BinaryMask& a, const BinaryMask& b) {
  return overlap_impl(a, b, true);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const auto o = mask_overlap(a, b);
  const std::int64_t uni = o.area_a + o.area_b - o.intersection;
  return uni > 0 ? static_cast<double>(o.intersection) /
                       static_cast<double>(uni)
                 : 0.0;
}

Box bbox_of(const BinaryMask& mask) {
  int rmin = mask.height(), rmax = -1, cmin = mask.width(), cmax = -1;
  for (int r = 0; r < mask.height(); ++r) {
    const std::uint8_t* row = mask.row(r);
    for (int c = 0; c < mask.width(); ++c) {
      if (!row[c]) continue;
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
  }
  if (rmax < 0) throw GeometryError("bounding box of an empty mask");
  return Box{static_cast<double>(cmin), static_cast<double>(rmin),
             static_cast<double>(cmax - cmin + 1),
             static_cast<double>(rmax - rmin + 1)};
}

Box bbox_of(const PolygonSet& poly) {
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  bool seen = false;
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); i += 2) {
      xmin = std::min(xmin, ring[i]);
      xmax = std::max(xmax, ring[i]);
      ymin = std::min(ymin, ring[i + 1]);
      ymax = std::max(ymax, ring[i + 1]);
      seen = true;
    }
  }
  if (!seen) throw GeometryError("bounding box of an empty polygon");
  return Box{xmin, ymin, xmax - xmin, ymax - ymin};
}

namespace serial {

BinaryMask rasterize(const PolygonSet& poly, const Window& window) {
  return rasterize_impl(poly, window, false);
}

BinaryMask erode(const BinaryMask& mask, Structuring se) {
  return erode_impl(mask, se, false);
}

DistanceMap edt(const ContourSet& contour) { return edt_impl(contour, false); }

MaskOverlap mask_overlap(const BinaryMask& a, const BinaryMask& b) {
  return overlap_impl(a, b, false);
}

}  // namespace serial

}  // namespace cocoaudit
