#include <cstdint>
#include <string>
#include <vector>

#include "cocoaudit/errors.hpp"
#include "cocoaudit/raster.hpp"

namespace cocoaudit {

BinaryMask decode_rle(const RunLengthMask& rle) {
  if (rle.width < 1 || rle.height < 1) {
    throw SchemaError("RLE size must be positive");
  }
  const std::uint64_t total =
      static_cast<std::uint64_t>(rle.width) * static_cast<std::uint64_t>(rle.height);
  std::uint64_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != total) {
    throw SchemaError("RLE counts sum to " + std::to_string(sum) +
                      ", expected " + std::to_string(total));
  }
  BinaryMask mask(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool fg = false;
  for (auto run : rle.counts) {
    if (fg) {
      for (std::uint64_t i = pos; i < pos + run; ++i) {
        const auto col = static_cast<int>(i / rle.height);
        const auto row = static_cast<int>(i % rle.height);
        mask.set(row, col);
      }
    }
    pos += run;
    fg = !fg;
  }
  return mask;
}

RunLengthMask encode_rle(const BinaryMask& mask) {
  RunLengthMask rle;
  rle.width = mask.width();
  rle.height = mask.height();
  bool current = false;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int r = 0; r < mask.height(); ++r) {
      const bool v = mask.at(r, c);
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

// Same scheme as the reference COCO mask API: runs after the second are
// delta-coded against the run two back, then written as 5-bit groups with a
// continuation bit, offset by 48 into printable ASCII.
std::vector<std::uint32_t> rle_counts_from_string(const std::string& s) {
  std::vector<std::uint32_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw SchemaError("truncated RLE string");
      const int c = static_cast<int>(s[p]) - 48;
      if (c < 0 || c > 63) throw SchemaError("invalid character in RLE string");
      x |= static_cast<long long>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (counts.size() > 2) x += counts[counts.size() - 2];
    if (x < 0 || x > 0xffffffffLL) throw SchemaError("RLE run out of range");
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

std::string rle_counts_to_string(std::span<const std::uint32_t> counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = counts[i];
    if (i > 2) x -= counts[i - 2];
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

}  // namespace cocoaudit
