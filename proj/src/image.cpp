#include "postmimic/image.hpp"

#include <algorithm>
#include <numeric>

namespace postmimic {

Image::Image(int height, int width, double fill) : extent_{height, width} {
  if (height < 0 || width < 0) throw ContractError("Image: negative extent " + extent_.str());
  values_.assign(extent_.count(), fill);
}

Image::Image(int height, int width, std::vector<double> values) : extent_{height, width}, values_(std::move(values)) {
  if (height < 0 || width < 0) throw ContractError("Image: negative extent " + extent_.str());
  if (values_.size() != extent_.count()) {
    throw ContractError("Image: " + std::to_string(values_.size()) + " values do not fill extent " + extent_.str());
  }
}

double Image::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double Image::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

double Image::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

void require_same_extent(const Image& a, const Image& b, const char* op) {
  if (a.extent() != b.extent()) {
    throw ContractError(std::string(op) + ": shape mismatch " + a.extent().str() + " vs " + b.extent().str());
  }
}

}  // namespace postmimic
