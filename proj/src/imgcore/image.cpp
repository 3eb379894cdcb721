#include "stegcost/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stegcost {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(width) +
                         "x" + std::to_string(height));
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(area(width, height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != area(width, height)) {
    throw DimensionError("pixel buffer does not match image dimensions");
  }
}

GrayImage GrayImage::transposed() const {
  GrayImage out(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

RealMap::RealMap(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  values_.assign(area(width, height), fill);
}

RealMap::RealMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != area(width, height)) {
    throw DimensionError("value buffer does not match map dimensions");
  }
}

RealMap RealMap::from_image(const GrayImage& img) {
  RealMap out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.values_.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  return out;
}

RealMap RealMap::transposed() const {
  RealMap out(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

bool RealMap::has_nan() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return std::isnan(v); });
}

Kernel::Kernel(int rows, int cols, std::vector<double> taps)
    : rows_(rows), cols_(cols), taps_(std::move(taps)) {
  if (rows <= 0 || cols <= 0) throw DimensionError("kernel dimensions must be positive");
  if (rows > kMaxKernelExtent || cols > kMaxKernelExtent) {
    throw DimensionError("kernel " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " exceeds the " + std::to_string(kMaxKernelExtent) + " tap bound");
  }
  if (taps_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DimensionError("tap count does not match kernel dimensions");
  }
  if (!std::all_of(taps_.begin(), taps_.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("kernel taps must be finite");
  }
}

double Kernel::sum() const { return std::accumulate(taps_.begin(), taps_.end(), 0.0); }

Kernel Kernel::flipped() const {
  std::vector<double> taps(taps_.rbegin(), taps_.rend());
  return Kernel(rows_, cols_, std::move(taps));
}

Kernel Kernel::transposed() const {
  std::vector<double> taps(taps_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      taps[static_cast<std::size_t>(c * rows_ + r)] = (*this)(r, c);
    }
  }
  return Kernel(cols_, rows_, std::move(taps));
}

Kernel Kernel::abs() const {
  std::vector<double> taps(taps_.size());
  std::transform(taps_.begin(), taps_.end(), taps.begin(), [](double v) { return std::fabs(v); });
  return Kernel(rows_, cols_, std::move(taps));
}

Kernel Kernel::scaled(double factor) const {
  std::vector<double> taps(taps_.size());
  std::transform(taps_.begin(), taps_.end(), taps.begin(), [&](double v) { return v * factor; });
  return Kernel(rows_, cols_, std::move(taps));
}

Kernel Kernel::outer(std::span<const double> column, std::span<const double> row) {
  std::vector<double> taps;
  taps.reserve(column.size() * row.size());
  for (double a : column) {
    for (double b : row) taps.push_back(a * b);
  }
  return Kernel(static_cast<int>(column.size()), static_cast<int>(row.size()), std::move(taps));
}

}  // namespace stegcost
