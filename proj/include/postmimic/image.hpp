#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "postmimic/errors.hpp"

namespace postmimic {

struct Extent {
  int height = 0;
  int width = 0;

  friend bool operator==(const Extent&, const Extent&) = default;
  std::size_t count() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::string str() const { return std::to_string(height) + "x" + std::to_string(width); }
};

/// Row-major single-channel image in 64-bit floating point.
class Image {
 public:
  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> values);

  int height() const { return extent_.height; }
  int width() const { return extent_.width; }
  Extent extent() const { return extent_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * extent_.width + x]; }
  double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * extent_.width + x]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double min() const;
  double max() const;
  double mean() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Extent extent_;
  std::vector<double> values_;
};

/// Throws ContractError naming both extents when they differ.
void require_same_extent(const Image& a, const Image& b, const char* op);

}  // namespace postmimic
