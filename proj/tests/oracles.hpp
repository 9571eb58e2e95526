#pragma once
// Brute-force reference computations. Deliberately naive: quadratic scans,
// per-pixel point tests, exhaustive search. They share no code with the
// library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "cocoaudit/raster.hpp"
#include "cocoaudit/shapes.hpp"

namespace oracle {

using cocoaudit::BinaryMask;
using cocoaudit::ContourSet;
using cocoaudit::Pixel;
using cocoaudit::PolygonSet;
using cocoaudit::Ring;

// Crossing-number test at (px, py). An edge counts when its lower end is at
// or below py and its upper end strictly above, with the crossing x taken
// from the lower endpoint.
inline bool inside_ring(const Ring& ring, double px, double py) {
  const std::size_t n = ring.size() / 2;
  bool in = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    double xa = ring[2 * i], ya = ring[2 * i + 1];
    double xb = ring[2 * j], yb = ring[2 * j + 1];
    if (ya == yb) continue;
    if (ya > yb) {
      std::swap(xa, xb);
      std::swap(ya, yb);
    }
    if (!(ya <= py && py < yb)) continue;
    const double x = xa + (py - ya) * (xb - xa) / (yb - ya);
    if (px < x) in = !in;
  }
  return in;
}

inline BinaryMask rasterize(const PolygonSet& poly, int width, int height,
                            int x0 = 0, int y0 = 0) {
  BinaryMask m(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double px = x0 + c + 0.5;
      const double py = y0 + r + 0.5;
      for (const auto& ring : poly.rings) {
        if (inside_ring(ring, px, py)) {
          m.set(r, c);
          break;
        }
      }
    }
  }
  return m;
}

// Pixels outside the grid count as background.
inline BinaryMask erode(const BinaryMask& m, bool square) {
  BinaryMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      bool keep = m.at(r, c);
      for (int dr = -1; dr <= 1 && keep; ++dr) {
        for (int dc = -1; dc <= 1 && keep; ++dc) {
          if (!square && dr != 0 && dc != 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= m.height() || cc >= m.width() ||
              !m.at(rr, cc)) {
            keep = false;
          }
        }
      }
      if (keep) out.set(r, c);
    }
  }
  return out;
}

inline std::vector<Pixel> contour(const BinaryMask& m, bool square) {
  const BinaryMask e = erode(m, square);
  std::vector<Pixel> px;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (m.at(r, c) && !e.at(r, c)) px.push_back({r, c});
    }
  }
  return px;
}

inline std::int64_t nearest_squared(const std::vector<Pixel>& set, int r, int c) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& p : set) {
    const std::int64_t dr = p.row - r, dc = p.col - c;
    best = std::min(best, dr * dr + dc * dc);
  }
  return best;
}

inline std::vector<std::int64_t> edt(const std::vector<Pixel>& set, int width,
                                     int height) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out[static_cast<std::size_t>(r) * width + c] = nearest_squared(set, r, c);
    }
  }
  return out;
}

struct Surface {
  double d_avg;
  double d_max;
};

// Both point sets in row-major order, pairwise scan.
inline Surface surface(std::vector<Pixel> a, std::vector<Pixel> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum_ab = 0, sum_ba = 0;
  std::int64_t max_sq = 0;
  for (const auto& p : a) {
    const auto sq = nearest_squared(b, p.row, p.col);
    sum_ab += std::sqrt(static_cast<double>(sq));
    max_sq = std::max(max_sq, sq);
  }
  for (const auto& p : b) {
    const auto sq = nearest_squared(a, p.row, p.col);
    sum_ba += std::sqrt(static_cast<double>(sq));
    max_sq = std::max(max_sq, sq);
  }
  return {(sum_ab + sum_ba) / static_cast<double>(a.size() + b.size()),
          std::sqrt(static_cast<double>(max_sq))};
}

// Best total weight over all partial one-to-one assignments using only
// entries above `threshold`. Returns (weight, chosen (row, col) list).
inline std::pair<double, std::vector<std::pair<int, int>>> optimal_assignment(
    const std::vector<std::vector<double>>& w, double threshold) {
  const int rows = static_cast<int>(w.size());
  const int cols = rows ? static_cast<int>(w[0].size()) : 0;
  double best = -1;
  std::vector<std::pair<int, int>> best_pick, cur;
  std::vector<bool> used(static_cast<std::size_t>(cols), false);
  std::function<void(int, double)> go = [&](int r, double acc) {
    if (r == rows) {
      if (acc > best) {
        best = acc;
        best_pick = cur;
      }
      return;
    }
    go(r + 1, acc);
    for (int c = 0; c < cols; ++c) {
      if (used[c] || !(w[r][c] > threshold)) continue;
      used[c] = true;
      cur.push_back({r, c});
      go(r + 1, acc + w[r][c]);
      cur.pop_back();
      used[c] = false;
    }
  };
  go(0, 0.0);
  return {best, best_pick};
}

// One-category, crowd-free PR construction. `ious[d][g]` is the overlap of
// the d-th detection (already in rank order) with ground truth g. At each
// threshold a detection claims the still-free ground truth with the highest
// IoU >= t (later index wins ties), then precision is interpolated at the
// recall points as the best precision at any rank reaching that recall.
inline double average_precision(const std::vector<std::vector<double>>& ious,
                                std::size_t num_gt, double t,
                                int recall_points = 101) {
  if (num_gt == 0) return -1.0;
  const std::size_t nd = ious.size();
  std::vector<bool> taken(num_gt, false);
  std::vector<double> prec(nd), rec(nd);
  double tp = 0;
  for (std::size_t d = 0; d < nd; ++d) {
    long pick = -1;
    double best = std::min(t, 1.0 - 1e-10);
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (taken[g]) continue;
      if (ious[d][g] >= best) {
        best = ious[d][g];
        pick = static_cast<long>(g);
      }
    }
    if (pick >= 0) {
      taken[static_cast<std::size_t>(pick)] = true;
      tp += 1;
    }
    prec[d] = tp / static_cast<double>(d + 1);
    rec[d] = tp / static_cast<double>(num_gt);
  }
  double sum = 0;
  for (int i = 0; i < recall_points; ++i) {
    const double r = i / static_cast<double>(recall_points - 1);
    double p = 0;
    for (std::size_t d = 0; d < nd; ++d) {
      if (rec[d] >= r) p = std::max(p, prec[d]);
    }
    sum += p;
  }
  return sum / recall_points;
}

struct Histogram {
  double mean = 0, stddev = 0, clip = 0;
  std::vector<std::size_t> counts;
  std::size_t below = 0, overflow = 0;
};

inline Histogram histogram(const std::vector<double>& values, int bins) {
  Histogram h;
  std::vector<double> kept;
  for (double v : values) {
    if (v > 1.0) kept.push_back(v); else ++h.below;
  }
  double s = 0;
  for (double v : kept) s += v;
  h.mean = s / kept.size();
  double ss = 0;
  for (double v : kept) ss += (v - h.mean) * (v - h.mean);
  h.stddev = std::sqrt(ss / kept.size());
  h.clip = h.mean + 3 * h.stddev;
  const double w = (h.clip - 1.0) / bins;
  h.counts.assign(bins, 0);
  for (double v : kept) {
    if (v > h.clip) {
      ++h.overflow;
      continue;
    }
    for (int i = 0; i < bins; ++i) {
      const double lo = 1.0 + i * w;
      const double hi = i + 1 == bins ? h.clip : 1.0 + (i + 1) * w;
      if (v > lo && v <= hi) {
        ++h.counts[i];
        break;
      }
    }
  }
  return h;
}

}  // namespace oracle
