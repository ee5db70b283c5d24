#pragma once

#include <facefit/image.h>

#include <cstdint>
#include <vector>

namespace facefit {

// Per-pixel (dx, dy) displacement field in pixels.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;
  std::vector<std::uint8_t> valid;

  static FlowField zeros(int w, int h);
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Per-block integer displacement minimizing the census-Hamming block cost over
// a square search window; ties break toward zero displacement. All pixels of a
// block share the block's displacement.
FlowField block_matching_flow(const Image& a, const Image& b, int block = 8, int radius = 4);

}  // namespace facefit
