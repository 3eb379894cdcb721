#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "stegcost/image.hpp"

namespace stegcost {

class PgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a binary (P5) PGM. Header comments are skipped; maxval must be in [1, 255].
GrayImage read_pgm(std::istream& in);
GrayImage load_image(const std::filesystem::path& path);

/// Writes exactly "P5\n<w> <h>\n255\n" followed by w*h bytes.
void write_pgm(std::ostream& out, const GrayImage& img);
void save_image(const GrayImage& img, const std::filesystem::path& path);

enum class MapScaling {
  /// Finite values mapped affinely from [min, max] to [0, 255]; +inf -> 255.
  affine,
  /// Fixed [0, 1] range, inverted: probability 0 is white, 1 is black.
  probability,
};

GrayImage render_map(const RealMap& map, MapScaling scaling);
void save_map(const RealMap& map, const std::filesystem::path& path, MapScaling scaling);

}  // namespace stegcost
