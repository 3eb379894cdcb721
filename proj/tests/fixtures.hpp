#pragma once
// Shared cover fixtures: sizes from smaller-than-the-kernel to 64x64,
// saturated pixels, flat areas, periodic patterns and ramps.

#include <string>
#include <vector>

#include "stegcost/synthetic.hpp"

namespace fixtures {

struct Named {
  std::string name;
  stegcost::GrayImage image;
};

inline stegcost::GrayImage ramp(int w, int h) {
  stegcost::GrayImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img(r, c) = static_cast<std::uint8_t>((255 * c) / (w - 1));
  return img;
}

inline stegcost::GrayImage with_saturation(stegcost::GrayImage img) {
  // Patches at both extremes and inside the evolved S-UNIWARD wet band.
  for (int r = 0; r < 4 && r < img.height(); ++r)
    for (int c = 0; c < 4 && c < img.width(); ++c) {
      img(r, c) = 255;
      img(img.height() - 1 - r, img.width() - 1 - c) = 0;
    }
  if (img.width() > 8 && img.height() > 8) {
    img(6, 2) = 250;
    img(6, 3) = 249;
    img(7, 2) = 5;
    img(7, 3) = 6;
  }
  return img;
}

inline std::vector<Named> cover_fixtures() {
  using namespace stegcost;
  return {
      {"synthetic-64", synthetic_image(64, 64, 1)},
      {"synthetic-full-range", synthetic_image(48, 40, 2, {0, 255, 2.0})},
      {"synthetic-32", synthetic_image(32, 32, 3)},
      {"checkerboard-1", checkerboard(8, 8, 1, 60, 180)},
      {"checkerboard-2", checkerboard(8, 8, 2, 60, 180)},
      {"flat", GrayImage(16, 16, 100)},
      {"flat-and-noise", flat_and_noise(40, 32, 120, 20, 230, 6)},
      {"tiny", synthetic_image(5, 7, 7)},
      {"saturated", with_saturation(synthetic_image(64, 48, 8, {0, 255, 1.0}))},
      {"ramp", ramp(33, 17)},
  };
}

}  // namespace fixtures
