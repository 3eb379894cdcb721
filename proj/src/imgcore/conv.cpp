#include "stegcost/conv.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stegcost/parallel.hpp"

namespace stegcost {

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

struct Padded {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                  static_cast<std::size_t>(c)];
  }
};

void check_args(const RealMap& src, const Kernel& k) {
  if (src.empty()) throw DimensionError("convolution of an empty map");
  if (k.rows() <= 0 || k.cols() <= 0) throw DimensionError("convolution with an empty kernel");
}

Padded pad_mirror(const RealMap& src, int pad_rows, int pad_cols) {
  Padded p;
  p.rows = src.height() + 2 * pad_rows;
  p.cols = src.width() + 2 * pad_cols;
  p.values.resize(static_cast<std::size_t>(p.rows) * static_cast<std::size_t>(p.cols));
  std::vector<int> col_map(static_cast<std::size_t>(p.cols));
  for (int x = 0; x < p.cols; ++x) col_map[static_cast<std::size_t>(x)] = mirror_index(x - pad_cols, src.width());
  for (int y = 0; y < p.rows; ++y) {
    const int sy = mirror_index(y - pad_rows, src.height());
    double* row = p.values.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(p.cols);
    for (int x = 0; x < p.cols; ++x) row[x] = src(sy, col_map[static_cast<std::size_t>(x)]);
  }
  return p;
}

// out(i, j) = sum_{a,b} k(a, b) * src(i + rows/2 - a, j + cols/2 - b), mirror indexed.
// With the kernel flipped (f(a', b') = k(rows-1-a', cols-1-b')) and a pad of
// (rows-1, cols-1) this walks the padded buffer forward from (i + rows/2, j + cols/2).
template <bool Parallel>
RealMap convolve(const RealMap& src, const Kernel& k) {
  check_args(src, k);
  const int kr = k.rows();
  const int kc = k.cols();
  const Padded p = pad_mirror(src, kr - 1, kc - 1);
  const Kernel f = k.flipped();
  const int ar = kr / 2;
  const int ac = kc / 2;
  const int h = src.height();
  const int w = src.width();
  RealMap out(w, h);

  auto row_kernel = [&](int i) {
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int a = 0; a < kr; ++a) {
        const double* prow = p.values.data() +
                             static_cast<std::size_t>(i + ar + a) * static_cast<std::size_t>(p.cols) +
                             static_cast<std::size_t>(j + ac);
        for (int b = 0; b < kc; ++b) {
          const double tap = f(a, b);
          if (tap != 0.0) acc += tap * prow[b];
        }
      }
      out(i, j) = acc;
    }
  };

  if constexpr (Parallel) {
    STEGCOST_OMP("omp parallel for schedule(static)")
    for (int i = 0; i < h; ++i) row_kernel(i);
  } else {
    for (int i = 0; i < h; ++i) row_kernel(i);
  }
  return out;
}

}  // namespace

RealMap conv2_mirror(const RealMap& src, const Kernel& k) { return convolve<true>(src, k); }

RealMap corr2_mirror(const RealMap& src, const Kernel& k) { return convolve<true>(src, k.flipped()); }

RealMap abs_conv2_mirror(const RealMap& src, const Kernel& k) {
  double peak = 0.0;
  for (double v : src.values()) {
    if (std::isfinite(v)) peak = std::max(peak, std::fabs(v));
  }
  const double floor = kResidualFloor * peak * k.abs().sum();
  RealMap out = conv2_mirror(src, k);
  for (double& v : out.values()) {
    v = std::fabs(v);
    if (v <= floor) v = 0.0;
  }
  return out;
}

namespace reference {

RealMap conv2_mirror(const RealMap& src, const Kernel& k) { return convolve<false>(src, k); }

RealMap corr2_mirror(const RealMap& src, const Kernel& k) { return convolve<false>(src, k.flipped()); }

}  // namespace reference

Kernel gaussian_kernel(double sigma, double L) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian sigma must be positive");
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("gaussian extent L must be positive");
  const double half_extent = std::ceil(L * sigma - 0.5);
  const int size = 2 * static_cast<int>(half_extent) + 1;
  if (size > kMaxKernelExtent) {
    throw DimensionError("gaussian kernel of size " + std::to_string(size) + " exceeds the tap bound");
  }
  const int half = size / 2;
  const double two_sigma2 = 2.0 * sigma * sigma;
  const double norm = 1.0 / (2.0 * M_PI * sigma * sigma);
  std::vector<double> taps;
  taps.reserve(static_cast<std::size_t>(size * size));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    for (int j = -half; j <= half; ++j) {
      const double v = norm * std::exp(-static_cast<double>(i * i + j * j) / two_sigma2);
      taps.push_back(v);
      total += v;
    }
  }
  for (double& v : taps) v /= total;
  return Kernel(size, size, std::move(taps));
}

Kernel avg_kernel(int size) {
  if (size <= 0 || size % 2 == 0) {
    throw std::invalid_argument("average filter size must be a positive odd integer, got " +
                                std::to_string(size));
  }
  const double tap = 1.0 / static_cast<double>(size * size);
  return Kernel(size, size, std::vector<double>(static_cast<std::size_t>(size * size), tap));
}

Kernel kb_kernel() {
  return Kernel(3, 3, {-1.0, 2.0, -1.0,
                       2.0, -4.0, 2.0,
                       -1.0, 2.0, -1.0});
}

}  // namespace stegcost
