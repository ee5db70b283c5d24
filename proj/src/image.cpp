#include <facefit/image.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace facefit {

Image Image::zeros(int w, int h, int c) { return constant(w, h, c, 0.0f); }

Image Image::constant(int w, int h, int c, float value) {
  Image img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.data.assign(static_cast<size_t>(w) * h * c, value);
  return img;
}

float Image::luminance(int x, int y) const {
  if (channels == 1) return at(x, y, 0);
  return 0.299f * at(x, y, 0) + 0.587f * at(x, y, 1) + 0.114f * at(x, y, 2);
}

float bilinear(const Image& img, double x, double y, int c) {
  const double gx = x - 0.5;
  const double gy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0;
  const double fy = gy - y0;
  const auto cl = [](int v, int hi) { return std::clamp(v, 0, hi); };
  const int xa = cl(x0, img.width - 1), xb = cl(x0 + 1, img.width - 1);
  const int ya = cl(y0, img.height - 1), yb = cl(y0 + 1, img.height - 1);
  const double v00 = img.at(xa, ya, c), v10 = img.at(xb, ya, c);
  const double v01 = img.at(xa, yb, c), v11 = img.at(xb, yb, c);
  return static_cast<float>((v00 * (1 - fx) + v10 * fx) * (1 - fy) +
                            (v01 * (1 - fx) + v11 * fx) * fy);
}

bool inside_image(const Image& img, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x < img.width && y < img.height;
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image out = Image::zeros(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y, 0) = img.luminance(x, y);
  return out;
}

static std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

Image quantize8(const Image& img) {
  Image out = img;
  for (auto& v : out.data) v = to_byte(v) / 255.0f;
  return out;
}

Image shift_image(const Image& img, int dx, int dy) {
  Image out = Image::zeros(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    const int sy = std::clamp(y - dy, 0, img.height - 1);
    for (int x = 0; x < img.width; ++x) {
      const int sx = std::clamp(x - dx, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

Image apply_illumination(const Image& img, double gamma, double gain, double bias) {
  Image out = img;
  for (auto& v : out.data)
    v = static_cast<float>(std::clamp(gain * std::pow(static_cast<double>(v), gamma) + bias, 0.0, 1.0));
  return out;
}

void write_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw DimensionError("image must have 1 or 3 channels, has " + std::to_string(img.channels));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> bytes(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) bytes[i] = to_byte(img.data[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

static int read_pnm_int(std::istream& in) {
  // Skips whitespace and '#' comments, per the PNM grammar.
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = in.get();
    c = in.get();
  }
  int value = -1;
  while (c != EOF && std::isdigit(c)) {
    if (value < 0) value = 0;
    value = value * 10 + (c - '0');
    c = in.get();
  }
  if (value < 0) throw FormatError("malformed PNM header");
  return value;
}

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels = 0;
  if (magic[0] == 'P' && magic[1] == '6')
    channels = 3;
  else if (magic[0] == 'P' && magic[1] == '5')
    channels = 1;
  else
    throw FormatError(path + ": not a binary PPM/PGM file");
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw FormatError(path + ": unsupported PNM header");
  // Exactly one whitespace byte separates the header from the payload; the
  // int reader has already consumed it.
  Image img = Image::zeros(w, h, channels);
  std::vector<std::uint8_t> bytes(img.data.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw FormatError(path + ": truncated pixel payload");
  for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0f;
  return img;
}

void write_mask_pgm(const std::vector<std::uint8_t>& mask, int width, int height,
                    const std::string& path) {
  if (mask.size() != static_cast<size_t>(width) * height)
    throw DimensionError("mask size does not match dimensions");
  Image img = Image::zeros(width, height, 1);
  for (size_t i = 0; i < mask.size(); ++i) img.data[i] = mask[i] ? 1.0f : 0.0f;
  write_image(img, path);
}

}  // namespace facefit
