#include <facefit/flow.h>

#include <facefit/census.h>
#include <facefit/error.h>

#include <algorithm>

namespace facefit {

FlowField FlowField::zeros(int w, int h) {
  FlowField f;
  f.width = w;
  f.height = h;
  const size_t n = static_cast<size_t>(w) * h;
  f.dx.assign(n, 0.0f);
  f.dy.assign(n, 0.0f);
  f.valid.assign(n, 1);
  return f;
}

FlowField block_matching_flow(const Image& a, const Image& b, int block, int radius) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError("flow inputs differ in size");

  const CensusImage ca = census_transform(a);
  const CensusImage cb = census_transform(b);
  FlowField flow = FlowField::zeros(a.width, a.height);

  for (int by = 0; by < a.height; by += block) {
    const int bh = std::min(block, a.height - by);
    for (int bx = 0; bx < a.width; bx += block) {
      const int bw = std::min(block, a.width - bx);

      long best_cost = -1;
      int best_dx = 0, best_dy = 0;
      long best_norm = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          long cost = 0;
          for (int y = 0; y < bh; ++y) {
            const int sy = std::clamp(by + y + dy, 0, b.height - 1);
            for (int x = 0; x < bw; ++x) {
              const int sx = std::clamp(bx + x + dx, 0, b.width - 1);
              cost += hamming(ca.at(bx + x, by + y), cb.at(sx, sy));
            }
          }
          const long norm = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
          if (best_cost < 0 || cost < best_cost || (cost == best_cost && norm < best_norm)) {
            best_cost = cost;
            best_dx = dx;
            best_dy = dy;
            best_norm = norm;
          }
        }
      }

      for (int y = 0; y < bh; ++y)
        for (int x = 0; x < bw; ++x) {
          const size_t i = flow.idx(bx + x, by + y);
          flow.dx[i] = static_cast<float>(best_dx);
          flow.dy[i] = static_cast<float>(best_dy);
        }
    }
  }
  return flow;
}

}  // namespace facefit
