#pragma once

#include <facefit/error.h>

#include <cstdint>
#include <string>
#include <vector>

namespace facefit {

// Row-major float image, values in [0,1], 1 or 3 channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  static Image zeros(int w, int h, int c);
  static Image constant(int w, int h, int c, float value);

  float at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

  // 0.299/0.587/0.114 luminance for 3-channel images, the channel itself otherwise.
  float luminance(int x, int y) const;

  size_t num_pixels() const { return static_cast<size_t>(width) * height; }
};

// Bilinear sample with clamp-to-edge addressing. Pixel (i,j) has its center at
// continuous coordinates (i+0.5, j+0.5).
float bilinear(const Image& img, double x, double y, int c);

bool inside_image(const Image& img, double x, double y);

Image to_gray(const Image& img);

// Round trip through 8-bit quantization, the same one the PPM writer applies.
Image quantize8(const Image& img);

// Translate content by integer (dx,dy); source reads clamp to the edge.
Image shift_image(const Image& img, int dx, int dy);

// clamp(gain * v^gamma + bias, 0, 1) per channel; strictly monotone for gain > 0.
Image apply_illumination(const Image& img, double gamma, double gain, double bias);

// Binary PPM (P6) for 3-channel, binary PGM (P5) for 1-channel, 8-bit.
void write_image(const Image& img, const std::string& path);
Image read_image(const std::string& path);

void write_mask_pgm(const std::vector<std::uint8_t>& mask, int width, int height,
                    const std::string& path);

}  // namespace facefit
