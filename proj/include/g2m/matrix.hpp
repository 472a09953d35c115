#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace g2m {

// Dense row-major integer matrix. Holds colour indices for ground truth and
// arbitrary (possibly out-of-palette) integers for parsed predictions.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> cells;

  Matrix() = default;
  Matrix(int rows_, int cols_, int fill = 0)
      : rows(rows_), cols(cols_), cells(static_cast<std::size_t>(rows_) * cols_, fill) {}

  static Matrix from_rows(const std::vector<std::vector<int>>& nested);
  std::vector<std::vector<int>> to_rows() const;

  int& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
  int at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int width_, int height_)
      : width(width_), height(height_), pixels(static_cast<std::size_t>(width_) * height_ * 3, 0) {}

  Rgb pixel(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set_pixel(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

}  // namespace g2m
