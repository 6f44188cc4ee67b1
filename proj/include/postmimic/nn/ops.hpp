#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "postmimic/nn/tensor.hpp"

namespace postmimic::nn {

/// Border handling for conv2d. Reflection and zero pad to "same" extent
/// (pad (k-1)/2 before, the remainder after); valid uses no padding.
enum class Padding { kReflection, kZero, kValid };

struct PadAmounts {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  friend bool operator==(const PadAmounts&, const PadAmounts&) = default;
};

PadAmounts same_padding(int kernel_h, int kernel_w);
PadAmounts padding_for(Padding mode, int kernel_h, int kernel_w);

/// Output shape of conv2d; kernels are (out_channels, in_channels, kh, kw).
Shape conv2d_output_shape(const Shape& input, const Shape& kernels, int stride, Padding padding);

/// Cross-correlation (no kernel flip).
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, std::span<const T> bias, int stride,
                      Padding padding);

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernels;
  std::vector<T> bias;
};

/// Gradients of conv2d given the upstream gradient. The input gradient is
/// left default-constructed when `need_input_grad` is false.
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels, int stride, Padding padding,
                               const BasicTensor<T>& grad_output, bool need_input_grad = true);

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <typename T>
PoolResult<T> max_pool_2x2(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> max_pool_2x2_backward(const BasicTensor<T>& grad_output, std::span<const std::uint32_t> argmax,
                                     const Shape& input_shape);

/// Nearest-neighbour 2x upsampling.
template <typename T>
BasicTensor<T> upsample_2x2(const BasicTensor<T>& input);
/// Sums each 2x2 block of the upstream gradient.
template <typename T>
BasicTensor<T> upsample_2x2_backward(const BasicTensor<T>& grad_output);

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, int begin, int count);
/// Splits the upstream gradient into (grad_a, grad_b) by channel range.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> concat_channels_backward(const BasicTensor<T>& grad_output, int channels_a);

enum class Activation { kRelu, kLeakyRelu, kLinear };
inline constexpr double kLeakySlope = 0.2;

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind);
template <typename T>
BasicTensor<T> activation_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output, Activation kind);

/// Mirror padding that excludes the edge pixel: {1,2,3} by 1 -> {2,1,2,3,2}.
template <typename T>
BasicTensor<T> reflection_pad(const BasicTensor<T>& input, const PadAmounts& pad);
template <typename T>
BasicTensor<T> reflection_pad_backward(const BasicTensor<T>& grad_output, const PadAmounts& pad, const Shape& input_shape);

template <typename T>
BasicTensor<T> zero_pad(const BasicTensor<T>& input, const PadAmounts& pad);
template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& input, const PadAmounts& pad);

template <typename T>
struct BatchNormCache {
  BasicTensor<T> normalized;
  std::vector<T> inv_std;
};

template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> var;
};

/// Per-channel normalization with batch statistics (biased variance).
template <typename T>
BasicTensor<T> batch_norm_train(const BasicTensor<T>& input, std::span<const T> gamma, std::span<const T> beta, T eps,
                                BatchNormCache<T>* cache, BatchNormStats<T>* stats);
template <typename T>
BasicTensor<T> batch_norm_inference(const BasicTensor<T>& input, std::span<const T> gamma, std::span<const T> beta,
                                    std::span<const T> running_mean, std::span<const T> running_var, T eps);

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> input;
  std::vector<T> gamma;
  std::vector<T> beta;
};

template <typename T>
BatchNormGrads<T> batch_norm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                                      const BasicTensor<T>& grad_output);

}  // namespace postmimic::nn
