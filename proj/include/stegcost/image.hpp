#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stegcost {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Maximum kernel extent accepted anywhere in the toolkit.
inline constexpr int kMaxKernelExtent = 64;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t operator()(int row, int col) const { return pixels_[index(row, col)]; }
  std::uint8_t& operator()(int row, int col) { return pixels_[index(row, col)]; }
  std::uint8_t operator[](std::size_t i) const { return pixels_[i]; }
  std::uint8_t& operator[](std::size_t i) { return pixels_[i]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  GrayImage transposed() const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Per-pixel extended-real map (values may be +inf, never NaN).
class RealMap {
 public:
  RealMap() = default;
  RealMap(int width, int height, double fill = 0.0);
  RealMap(int width, int height, std::vector<double> values);

  static RealMap from_image(const GrayImage& img);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(int row, int col) const { return values_[index(row, col)]; }
  double& operator()(int row, int col) { return values_[index(row, col)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const RealMap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool same_shape(const GrayImage& img) const {
    return width_ == img.width() && height_ == img.height();
  }

  RealMap transposed() const;
  bool has_nan() const;

  friend bool operator==(const RealMap&, const RealMap&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Dense 2-D filter, row-major taps.
class Kernel {
 public:
  Kernel() = default;
  Kernel(int rows, int cols, std::vector<double> taps);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double operator()(int r, int c) const { return taps_[static_cast<std::size_t>(r * cols_ + c)]; }
  std::span<const double> taps() const { return taps_; }

  double sum() const;
  Kernel flipped() const;
  Kernel transposed() const;
  Kernel abs() const;
  Kernel scaled(double factor) const;

  static Kernel outer(std::span<const double> column, std::span<const double> row);

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> taps_;
};

}  // namespace stegcost
