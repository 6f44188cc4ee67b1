#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "postmimic/image.hpp"

namespace postmimic::nn {

/// NCHW tensor dimensions.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  friend bool operator==(const Shape&, const Shape&) = default;
  std::size_t count() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  std::string str() const;
};

/// Dense NCHW tensor. `T` is float for training and double for gradient checks.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : shape_{1, 1, 1, 1}, data_(1, T{0}) {}
  explicit BasicTensor(Shape shape, T fill = T{0});
  BasicTensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  T at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  std::span<T> plane(int n, int c) { return {data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(), shape_.plane()}; }
  std::span<const T> plane(int n, int c) const {
    return {data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(), shape_.plane()};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Throws ContractError if any dimension is < 1.
void validate_shape(const Shape& shape, const char* op);

/// Packs single-channel images into an (N, 1, H, W) tensor; all extents must match.
Tensor stack_images(std::span<const Image> images);
/// Extracts (n, channel) as an Image.
Image plane_to_image(const Tensor& t, int n, int channel = 0);

}  // namespace postmimic::nn
