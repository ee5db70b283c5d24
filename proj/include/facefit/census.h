#pragma once

#include <facefit/image.h>

#include <bit>
#include <cstdint>
#include <vector>

namespace facefit {

// 7x7 census transform: per pixel, 48 sign comparisons against the
// neighborhood (center excluded), enumerated row-major. Bit b is set iff
// neighbor intensity > center intensity. Borders clamp to the edge.
struct CensusImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint64_t> descriptors;

  std::uint64_t at(int x, int y) const { return descriptors[static_cast<size_t>(y) * width + x]; }
};

// Color input is reduced to luminance first.
CensusImage census_transform(const Image& img);

inline int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

}  // namespace facefit
