#include <facefit/census.h>

#include <algorithm>

namespace facefit {

CensusImage census_transform(const Image& img) {
  const Image gray = to_gray(img);
  CensusImage out;
  out.width = gray.width;
  out.height = gray.height;
  out.descriptors.assign(gray.num_pixels(), 0);

  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      const float center = gray.at(x, y, 0);
      std::uint64_t bits = 0;
      int bit = 0;
      for (int dy = -3; dy <= 3; ++dy) {
        const int ny = std::clamp(y + dy, 0, gray.height - 1);
        for (int dx = -3; dx <= 3; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = std::clamp(x + dx, 0, gray.width - 1);
          if (gray.at(nx, ny, 0) > center) bits |= (std::uint64_t{1} << bit);
          ++bit;
        }
      }
      out.descriptors[static_cast<size_t>(y) * gray.width + x] = bits;
    }
  }
  return out;
}

}  // namespace facefit
