#include <facefit/descriptor.h>

#include <facefit/types.h>

#include <algorithm>
#include <cmath>

namespace facefit {

namespace {

constexpr int kLevels = 3;
constexpr int kGrid = 4;
constexpr int kBins = 8;

Image downsample2(const Image& img) {
  const int w = std::max(1, img.width / 2);
  const int h = std::max(1, img.height / 2);
  Image out = Image::zeros(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x1 = std::min(2 * x + 1, img.width - 1);
      const int y1 = std::min(2 * y + 1, img.height - 1);
      out.at(x, y, 0) = 0.25f * (img.at(2 * x, 2 * y, 0) + img.at(x1, 2 * y, 0) +
                                 img.at(2 * x, y1, 0) + img.at(x1, y1, 0));
    }
  return out;
}

void describe_level(const Image& gray, double* out) {
  for (int cy = 0; cy < kGrid; ++cy) {
    const int y0 = cy * gray.height / kGrid;
    const int y1 = std::max(y0 + 1, (cy + 1) * gray.height / kGrid);
    for (int cx = 0; cx < kGrid; ++cx) {
      const int x0 = cx * gray.width / kGrid;
      const int x1 = std::max(x0 + 1, (cx + 1) * gray.width / kGrid);

      double sum = 0.0, sum2 = 0.0, hist[kBins] = {0};
      double mag_total = 0.0;
      long count = 0;
      for (int y = y0; y < y1 && y < gray.height; ++y)
        for (int x = x0; x < x1 && x < gray.width; ++x) {
          const double v = gray.at(x, y, 0);
          sum += v;
          sum2 += v * v;
          ++count;
          const double gx = gray.at(std::min(x + 1, gray.width - 1), y, 0) -
                            gray.at(std::max(x - 1, 0), y, 0);
          const double gy = gray.at(x, std::min(y + 1, gray.height - 1), 0) -
                            gray.at(x, std::max(y - 1, 0), 0);
          const double mag = std::hypot(gx, gy);
          if (mag > 1e-12) {
            int bin = static_cast<int>(std::floor((std::atan2(gy, gx) + kPi) / (2.0 * kPi) * kBins));
            bin = std::clamp(bin, 0, kBins - 1);
            hist[bin] += mag;
            mag_total += mag;
          }
        }
      const double mean = count > 0 ? sum / count : 0.0;
      const double var = count > 0 ? std::max(0.0, sum2 / count - mean * mean) : 0.0;
      *out++ = mean;
      *out++ = var;
      for (int b = 0; b < kBins; ++b) *out++ = hist[b] / (mag_total + 1e-12);
    }
  }
}

}  // namespace

Eigen::VectorXd pyramid_descriptor(const Image& img) {
  Eigen::VectorXd desc(kLevels * kGrid * kGrid * (2 + kBins));
  Image level = to_gray(img);
  double* out = desc.data();
  for (int l = 0; l < kLevels; ++l) {
    describe_level(level, out);
    out += kGrid * kGrid * (2 + kBins);
    if (l + 1 < kLevels) level = downsample2(level);
  }
  return desc;
}

}  // namespace facefit
