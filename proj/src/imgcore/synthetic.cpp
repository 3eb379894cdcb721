#include "stegcost/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "stegcost/prng.hpp"

namespace stegcost {

namespace {

double gaussian(Xorshift64Star& rng) {
  // Box-Muller; one variate per call keeps the stream layout simple.
  const double u1 = std::max(rng.uniform(), 1e-300);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Bilinearly interpolated lattice noise at one octave.
class ValueNoise {
 public:
  ValueNoise(int cells_x, int cells_y, Xorshift64Star& rng)
      : cx_(cells_x), cy_(cells_y), lattice_(static_cast<std::size_t>((cells_x + 1) * (cells_y + 1))) {
    for (double& v : lattice_) v = 2.0 * rng.uniform() - 1.0;
  }

  double at(double u, double v) const {
    const double fx = u * cx_;
    const double fy = v * cy_;
    const int x0 = std::min(static_cast<int>(fx), cx_ - 1);
    const int y0 = std::min(static_cast<int>(fy), cy_ - 1);
    const double tx = smooth(fx - x0);
    const double ty = smooth(fy - y0);
    const double a = node(x0, y0) * (1 - tx) + node(x0 + 1, y0) * tx;
    const double b = node(x0, y0 + 1) * (1 - tx) + node(x0 + 1, y0 + 1) * tx;
    return a * (1 - ty) + b * ty;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double node(int x, int y) const { return lattice_[static_cast<std::size_t>(y * (cx_ + 1) + x)]; }

  int cx_;
  int cy_;
  std::vector<double> lattice_;
};

}  // namespace

GrayImage synthetic_image(int width, int height, std::uint64_t seed, const SyntheticOptions& opts) {
  Xorshift64Star rng(seed);
  std::vector<double> field(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));

  const double base = 60.0 + 120.0 * rng.uniform();
  const double gx = (rng.uniform() - 0.5) * 60.0;
  const double gy = (rng.uniform() - 0.5) * 60.0;

  std::vector<ValueNoise> octaves;
  const int n_octaves = 4;
  for (int o = 0; o < n_octaves; ++o) {
    const int cells = 2 << o;
    octaves.emplace_back(cells, cells, rng);
  }
  // Where texture lives: a coarse mask, sharpened so flat areas stay flat.
  ValueNoise mask(3, 3, rng);
  const double texture_amp = 10.0 + 30.0 * rng.uniform();
  ValueNoise fine(std::max(4, width / 2), std::max(4, height / 2), rng);
  const double fine_amp = 4.0 + 10.0 * rng.uniform();

  struct Shape {
    bool ellipse;
    double cx, cy, rx, ry, offset;
    int stripes;  // 0 none, 1 horizontal, 2 vertical
    double period;
  };
  std::vector<Shape> shapes;
  const int n_shapes = 2 + static_cast<int>(rng.below(4));
  for (int s = 0; s < n_shapes; ++s) {
    Shape sh{};
    sh.ellipse = rng.uniform() < 0.5;
    sh.cx = rng.uniform();
    sh.cy = rng.uniform();
    sh.rx = 0.08 + 0.25 * rng.uniform();
    sh.ry = 0.08 + 0.25 * rng.uniform();
    sh.offset = (rng.uniform() - 0.5) * 100.0;
    sh.stripes = static_cast<int>(rng.below(3));
    sh.period = 2.0 + static_cast<double>(rng.below(5));
    shapes.push_back(sh);
  }

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double u = (c + 0.5) / width;
      const double v = (r + 0.5) / height;
      double value = base + gx * (u - 0.5) + gy * (v - 0.5);
      double fractal = 0.0;
      double amp = 1.0;
      for (const auto& oct : octaves) {
        fractal += amp * oct.at(u, v);
        amp *= 0.5;
      }
      const double m = std::clamp(1.5 * mask.at(u, v) + 0.3, 0.0, 1.0);
      value += texture_amp * m * fractal + fine_amp * m * fine.at(u, v);
      for (const Shape& sh : shapes) {
        const double dx = (u - sh.cx) / sh.rx;
        const double dy = (v - sh.cy) / sh.ry;
        const bool inside = sh.ellipse ? dx * dx + dy * dy <= 1.0 : std::fabs(dx) <= 1.0 && std::fabs(dy) <= 1.0;
        if (!inside) continue;
        double off = sh.offset;
        if (sh.stripes == 1 && static_cast<int>(r / sh.period) % 2 == 1) off *= 0.4;
        if (sh.stripes == 2 && static_cast<int>(c / sh.period) % 2 == 1) off *= 0.4;
        value += off;
      }
      field[static_cast<std::size_t>(r * width + c)] = value;
    }
  }

  GrayImage img(width, height);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double noisy = field[i] + opts.noise_sigma * gaussian(rng);
    const long q = std::lround(noisy);
    img[i] = static_cast<std::uint8_t>(std::clamp<long>(q, opts.min_value, opts.max_value));
  }
  return img;
}

std::vector<GrayImage> synthetic_corpus(std::size_t count, int width, int height, std::uint64_t seed,
                                        const SyntheticOptions& opts) {
  std::vector<GrayImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_image(width, height, derive_seed(seed, i), opts));
  return out;
}

GrayImage checkerboard(int width, int height, int cell, std::uint8_t low, std::uint8_t high) {
  GrayImage img(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) img(r, c) = ((r / cell + c / cell) % 2 == 0) ? low : high;
  }
  return img;
}

GrayImage flat_and_noise(int width, int height, std::uint8_t flat, std::uint8_t lo, std::uint8_t hi,
                         std::uint64_t seed) {
  Xorshift64Star rng(seed);
  GrayImage img(width, height);
  const int span = hi - lo + 1;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      img(r, c) = c < width / 2 ? flat : static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(span))));
    }
  }
  return img;
}

}  // namespace stegcost
