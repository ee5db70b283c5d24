#include <facefit/census.h>
#include <facefit/rng.h>

#include <doctest.h>

#include <cmath>

using namespace facefit;

namespace {

Image random_gray(Rng& rng, int w, int h) {
  Image img = Image::zeros(w, h, 1);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("constant image has all-zero descriptors") {
  const Image img = Image::constant(16, 12, 1, 0.4f);
  const CensusImage c = census_transform(img);
  for (const auto d : c.descriptors) CHECK(d == 0);
}

TEST_CASE("single bright pixel in a flat field") {
  Image img = Image::constant(15, 15, 1, 0.3f);
  img.at(7, 7, 0) = 0.9f;
  const CensusImage c = census_transform(img);
  CHECK(c.at(7, 7) == 0);  // no neighbor exceeds the bright center
  int neighbors_with_one_bit = 0;
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 15; ++x) {
      if (x == 7 && y == 7) continue;
      const int bits = std::popcount(c.at(x, y));
      if (std::abs(x - 7) <= 3 && std::abs(y - 7) <= 3) {
        CHECK(bits == 1);  // sees exactly the one bright pixel
        ++neighbors_with_one_bit;
      } else {
        CHECK(bits == 0);
      }
    }
  CHECK(neighbors_with_one_bit == 48);
}

TEST_CASE("descriptor bit order is row-major over the 7x7 neighborhood") {
  // Brighter pixel directly left of center: offset (dx,dy)=(-1,0) comes after
  // three full rows (21 bits) plus dx=-3,-2 of its own row, so bit 23.
  Image img = Image::constant(9, 9, 1, 0.2f);
  img.at(3, 4, 0) = 0.8f;
  const CensusImage c = census_transform(img);
  CHECK(c.at(4, 4) == (std::uint64_t{1} << 23));
}

TEST_CASE("census is invariant under monotone maps except at 8-bit quantization ties") {
  Rng rng(8);
  for (int trial = 0; trial < 4; ++trial) {
    const Image base = quantize8(random_gray(rng, 24, 20));
    Image gamma = base;
    for (auto& v : gamma.data) v = std::pow(v, 0.5f);
    const Image gamma_q = quantize8(gamma);

    const CensusImage ca = census_transform(base);
    const CensusImage cb = census_transform(gamma_q);
    const auto value = [&](const Image& img, int x, int y) {
      return img.at(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1), 0);
    };
    for (int y = 0; y < base.height; ++y)
      for (int x = 0; x < base.width; ++x) {
        const std::uint64_t diff = ca.at(x, y) ^ cb.at(x, y);
        if (diff == 0) continue;
        // every flipped bit must sit on a quantization tie in one of the images
        int bit = 0;
        for (int dy = -3; dy <= 3; ++dy)
          for (int dx = -3; dx <= 3; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if ((diff >> bit) & 1) {
              const bool tie_base = value(base, x + dx, y + dy) == value(base, x, y);
              const bool tie_gamma = value(gamma_q, x + dx, y + dy) == value(gamma_q, x, y);
              CHECK((tie_base || tie_gamma));
            }
            ++bit;
          }
      }
  }
}

TEST_CASE("hamming counts differing bits") {
  CHECK(hamming(0, 0) == 0);
  CHECK(hamming(0b1011, 0b0001) == 2);
  CHECK(hamming(~std::uint64_t{0}, 0) == 64);
}
