#pragma once

#include <cstdint>
#include <vector>

#include "stegcost/image.hpp"

namespace stegcost {

/// Procedural stand-ins for natural photographs: a smooth illumination field,
/// piecewise-constant shapes with hard edges, spatially varying fractal texture
/// and mild sensor noise. Deterministic in (width, height, seed).
struct SyntheticOptions {
  int min_value = 8;
  int max_value = 247;
  double noise_sigma = 1.0;
};

GrayImage synthetic_image(int width, int height, std::uint64_t seed, const SyntheticOptions& opts = {});

std::vector<GrayImage> synthetic_corpus(std::size_t count, int width, int height, std::uint64_t seed,
                                        const SyntheticOptions& opts = {});

/// Two-level checkerboard with square cells.
GrayImage checkerboard(int width, int height, int cell, std::uint8_t low, std::uint8_t high);

/// Left half constant at `flat`, right half uniform noise in [lo, hi].
GrayImage flat_and_noise(int width, int height, std::uint8_t flat, std::uint8_t lo, std::uint8_t hi,
                         std::uint64_t seed);

}  // namespace stegcost
