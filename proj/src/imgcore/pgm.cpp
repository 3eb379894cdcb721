#include "stegcost/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace stegcost {

namespace {

void skip_space_and_comments(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& in, const char* what) {
  skip_space_and_comments(in);
  long value = 0;
  int digits = 0;
  while (std::isdigit(in.peek())) {
    value = value * 10 + (in.get() - '0');
    if (value > 1'000'000) throw PgmError(std::string("PGM ") + what + " is too large");
    ++digits;
  }
  if (digits == 0) throw PgmError(std::string("malformed PGM header: expected ") + what);
  return value;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw PgmError("not a binary PGM (expected magic P5)");
  const long width = read_header_int(in, "width");
  const long height = read_header_int(in, "height");
  const long maxval = read_header_int(in, "maxval");
  if (width <= 0 || height <= 0) throw PgmError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) {
    throw PgmError("PGM maxval " + std::to_string(maxval) + " out of range [1, 255]");
  }
  if (!std::isspace(in.get())) throw PgmError("malformed PGM header: missing separator before raster");

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) throw PgmError("truncated PGM raster");
  if (std::any_of(pixels.begin(), pixels.end(), [&](std::uint8_t v) { return v > maxval; })) {
    throw PgmError("PGM sample exceeds maxval");
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError("cannot open " + path.string());
  return read_pgm(in);
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.size()));
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError("cannot write " + path.string());
  write_pgm(out, img);
  if (!out) throw PgmError("write failed for " + path.string());
}

GrayImage render_map(const RealMap& map, MapScaling scaling) {
  GrayImage out(map.width(), map.height());
  if (scaling == MapScaling::probability) {
    for (std::size_t i = 0; i < map.size(); ++i) {
      const double p = std::clamp(map[i], 0.0, 1.0);
      out[i] = static_cast<std::uint8_t>(255 - std::lround(255.0 * p));
    }
    return out;
  }
  double lo = kInf;
  double hi = -kInf;
  for (double v : map.values()) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double range = hi - lo;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = map[i];
    if (!std::isfinite(v)) {
      out[i] = 255;
    } else if (!(range > 0.0)) {
      out[i] = 0;
    } else {
      out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / range));
    }
  }
  return out;
}

void save_map(const RealMap& map, const std::filesystem::path& path, MapScaling scaling) {
  save_image(render_map(map, scaling), path);
}

}  // namespace stegcost
