#include "postmimic/nn/tensor.hpp"

#include <algorithm>

namespace postmimic::nn {

void validate_shape(const Shape& shape, const char* op) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw ContractError(std::string(op) + ": all tensor dims must be >= 1, got " + shape.str());
  }
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(shape) {
  validate_shape(shape_, "Tensor");
  data_.assign(shape_.count(), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  validate_shape(shape_, "Tensor");
  if (data_.size() != shape_.count()) {
    throw ContractError("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_.str());
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;

Tensor stack_images(std::span<const Image> images) {
  if (images.empty()) throw ContractError("stack_images: no images");
  const Extent e = images.front().extent();
  Tensor t({static_cast<int>(images.size()), 1, e.height, e.width});
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].extent() != e) {
      throw ContractError("stack_images: extent " + images[n].extent().str() + " differs from " + e.str());
    }
    auto dst = t.plane(static_cast<int>(n), 0);
    std::transform(images[n].values().begin(), images[n].values().end(), dst.begin(),
                   [](double v) { return static_cast<float>(v); });
  }
  return t;
}

Image plane_to_image(const Tensor& t, int n, int channel) {
  const auto src = t.plane(n, channel);
  return Image(t.shape().h, t.shape().w, std::vector<double>(src.begin(), src.end()));
}

}  // namespace postmimic::nn
