#include "postmimic/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "gemm.hpp"

namespace postmimic::nn {
namespace {

// Reflect index i into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename T>
BasicTensor<T> pad_for_conv(const BasicTensor<T>& input, Padding padding, const PadAmounts& pad) {
  switch (padding) {
    case Padding::kReflection:
      return reflection_pad(input, pad);
    case Padding::kZero:
      return zero_pad(input, pad);
    case Padding::kValid:
      break;
  }
  return input;
}

// Column matrix of shape (C*kh*kw) x (rows*Wo) for output rows [y0, y1) of one batch item.
template <typename T>
void im2col(const BasicTensor<T>& padded, int n, int kh, int kw, int stride, int y0, int y1, int out_w,
            std::vector<T>& cols) {
  const Shape& s = padded.shape();
  const std::size_t out_plane = static_cast<std::size_t>(y1 - y0) * out_w;
  cols.resize(static_cast<std::size_t>(s.c) * kh * kw * out_plane);
  T* dst = cols.data();
  for (int c = 0; c < s.c; ++c) {
    const T* src = padded.plane(n, c).data();
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        for (int oy = y0; oy < y1; ++oy) {
          const T* row = src + static_cast<std::size_t>(oy * stride + i) * s.w + j;
          if (stride == 1) {
            std::memcpy(dst, row, sizeof(T) * out_w);
          } else {
            for (int ox = 0; ox < out_w; ++ox) dst[ox] = row[static_cast<std::size_t>(ox) * stride];
          }
          dst += out_w;
        }
      }
    }
  }
}

template <typename T>
void col2im(const std::vector<T>& cols, BasicTensor<T>& padded_grad, int n, int kh, int kw, int stride, int out_h,
            int out_w) {
  const Shape& s = padded_grad.shape();
  const T* src = cols.data();
  for (int c = 0; c < s.c; ++c) {
    T* dst = padded_grad.plane(n, c).data();
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        for (int oy = 0; oy < out_h; ++oy) {
          T* row = dst + static_cast<std::size_t>(oy * stride + i) * s.w + j;
          for (int ox = 0; ox < out_w; ++ox) row[static_cast<std::size_t>(ox) * stride] += src[ox];
          src += out_w;
        }
      }
    }
  }
}

// 1x1 stride-1 kernels need no padding and no column matrix.
bool is_pointwise(const Shape& kernels, int stride, Padding) { return kernels.h == 1 && kernels.w == 1 && stride == 1; }

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

PadAmounts same_padding(int kernel_h, int kernel_w) {
  const int top = (kernel_h - 1) / 2;
  const int left = (kernel_w - 1) / 2;
  return {top, kernel_h - 1 - top, left, kernel_w - 1 - left};
}

PadAmounts padding_for(Padding mode, int kernel_h, int kernel_w) {
  return mode == Padding::kValid ? PadAmounts{} : same_padding(kernel_h, kernel_w);
}

Shape conv2d_output_shape(const Shape& input, const Shape& kernels, int stride, Padding padding) {
  if (kernels.c != input.c) {
    throw ContractError("conv2d: kernel expects " + std::to_string(kernels.c) + " input channels but input has " +
                        std::to_string(input.c));
  }
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1, got " + std::to_string(stride));
  const PadAmounts pad = padding_for(padding, kernels.h, kernels.w);
  const int ph = input.h + pad.top + pad.bottom;
  const int pw = input.w + pad.left + pad.right;
  if (ph < kernels.h || pw < kernels.w) {
    throw ContractError("conv2d: input " + input.str() + " is smaller than kernel " + kernels.str());
  }
  return {input.n, kernels.n, (ph - kernels.h) / stride + 1, (pw - kernels.w) / stride + 1};
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, std::span<const T> bias, int stride,
                      Padding padding) {
  const Shape out_shape = conv2d_output_shape(input.shape(), kernels.shape(), stride, padding);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(kernels.shape().n)) {
    throw ContractError("conv2d: bias has " + std::to_string(bias.size()) + " entries for " +
                        std::to_string(kernels.shape().n) + " output channels");
  }
  const Shape& ks = kernels.shape();
  const int k = ks.c * ks.h * ks.w;
  const int out_plane = out_shape.h * out_shape.w;
  BasicTensor<T> out(out_shape);
  for (int n = 0; n < out_shape.n; ++n) {
    T* dst = out.plane(n, 0).data();
    for (int oc = 0; oc < out_shape.c; ++oc) {
      const T b = bias.empty() ? T{0} : bias[oc];
      std::fill(dst + static_cast<std::size_t>(oc) * out_plane, dst + static_cast<std::size_t>(oc + 1) * out_plane, b);
    }
  }
  if (is_pointwise(ks, stride, padding)) {
    for (int n = 0; n < out_shape.n; ++n) {
      detail::gemm(false, false, ks.n, out_plane, k, T{1}, kernels.data().data(), k, input.plane(n, 0).data(),
                   out_plane, T{1}, out.plane(n, 0).data(), out_plane);
    }
    return out;
  }
  const BasicTensor<T> padded = pad_for_conv(input, padding, padding_for(padding, ks.h, ks.w));
  // row bands keep the column matrix near 1M entries
  const int band = std::clamp((1 << 20) / std::max(1, k * out_shape.w), 1, out_shape.h);
  std::vector<T> cols;
  for (int n = 0; n < out_shape.n; ++n) {
    for (int y0 = 0; y0 < out_shape.h; y0 += band) {
      const int y1 = std::min(out_shape.h, y0 + band);
      const int width = (y1 - y0) * out_shape.w;
      im2col(padded, n, ks.h, ks.w, stride, y0, y1, out_shape.w, cols);
      detail::gemm(false, false, ks.n, width, k, T{1}, kernels.data().data(), k, cols.data(), width, T{1},
                   out.plane(n, 0).data() + static_cast<std::size_t>(y0) * out_shape.w, out_plane);
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels, int stride, Padding padding,
                               const BasicTensor<T>& grad_output, bool need_input_grad) {
  const Shape out_shape = conv2d_output_shape(input.shape(), kernels.shape(), stride, padding);
  if (grad_output.shape() != out_shape) {
    throw ContractError("conv2d_backward: upstream gradient " + grad_output.shape().str() + " does not match output " +
                        out_shape.str());
  }
  const Shape& ks = kernels.shape();
  const int k = ks.c * ks.h * ks.w;
  const int out_plane = out_shape.h * out_shape.w;

  Conv2dGrads<T> g;
  g.kernels = BasicTensor<T>(ks);
  g.bias.assign(ks.n, T{0});
  for (int n = 0; n < out_shape.n; ++n) {
    const T* go = grad_output.plane(n, 0).data();
    for (int oc = 0; oc < ks.n; ++oc) {
      T acc{0};
      for (int i = 0; i < out_plane; ++i) acc += go[static_cast<std::size_t>(oc) * out_plane + i];
      g.bias[oc] += acc;
    }
  }

  if (is_pointwise(ks, stride, padding)) {
    if (need_input_grad) g.input = BasicTensor<T>(input.shape());
    for (int n = 0; n < out_shape.n; ++n) {
      const T* go = grad_output.plane(n, 0).data();
      detail::gemm(false, true, ks.n, k, out_plane, T{1}, go, out_plane, input.plane(n, 0).data(), out_plane, T{1},
                   g.kernels.data().data(), k);
      if (need_input_grad) {
        detail::gemm(true, false, k, out_plane, ks.n, T{1}, kernels.data().data(), k, go, out_plane, T{0},
                     g.input.plane(n, 0).data(), out_plane);
      }
    }
    return g;
  }

  const PadAmounts pad = padding_for(padding, ks.h, ks.w);
  const BasicTensor<T> padded = pad_for_conv(input, padding, pad);
  BasicTensor<T> padded_grad;
  if (need_input_grad) padded_grad = BasicTensor<T>(padded.shape());
  std::vector<T> cols;
  std::vector<T> grad_cols;
  for (int n = 0; n < out_shape.n; ++n) {
    const T* go = grad_output.plane(n, 0).data();
    im2col(padded, n, ks.h, ks.w, stride, 0, out_shape.h, out_shape.w, cols);
    detail::gemm(false, true, ks.n, k, out_plane, T{1}, go, out_plane, cols.data(), out_plane, T{1},
                 g.kernels.data().data(), k);
    if (need_input_grad) {
      grad_cols.assign(cols.size(), T{0});
      detail::gemm(true, false, k, out_plane, ks.n, T{1}, kernels.data().data(), k, go, out_plane, T{0},
                   grad_cols.data(), out_plane);
      col2im(grad_cols, padded_grad, n, ks.h, ks.w, stride, out_shape.h, out_shape.w);
    }
  }
  if (need_input_grad) {
    switch (padding) {
      case Padding::kReflection:
        g.input = reflection_pad_backward(padded_grad, pad, input.shape());
        break;
      case Padding::kZero:
        g.input = crop(padded_grad, pad);
        break;
      case Padding::kValid:
        g.input = std::move(padded_grad);
        break;
    }
  }
  return g;
}

template <typename T>
PoolResult<T> max_pool_2x2(const BasicTensor<T>& input) {
  const Shape& s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ContractError("max_pool_2x2: spatial dims must be even, got " + std::to_string(s.h) + "x" +
                        std::to_string(s.w) + "; pad the input first");
  }
  PoolResult<T> r{BasicTensor<T>({s.n, s.c, s.h / 2, s.w / 2}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      for (int y = 0; y < s.h; y += 2) {
        for (int x = 0; x < s.w; x += 2, ++o) {
          std::size_t best = base + static_cast<std::size_t>(y) * s.w + x;
          for (const std::size_t cand : {best + 1, best + s.w, best + s.w + 1}) {
            if (input[cand] > input[best]) best = cand;
          }
          r.output[o] = input[best];
          r.argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> max_pool_2x2_backward(const BasicTensor<T>& grad_output, std::span<const std::uint32_t> argmax,
                                     const Shape& input_shape) {
  if (argmax.size() != grad_output.size()) throw ContractError("max_pool_2x2_backward: argmax size mismatch");
  BasicTensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_output[i];
  return g;
}

template <typename T>
BasicTensor<T> upsample_2x2(const BasicTensor<T>& input) {
  const Shape& s = input.shape();
  BasicTensor<T> out({s.n, s.c, s.h * 2, s.w * 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h * 2; ++y)
        for (int x = 0; x < s.w * 2; ++x) out.at(n, c, y, x) = input.at(n, c, y / 2, x / 2);
  return out;
}

template <typename T>
BasicTensor<T> upsample_2x2_backward(const BasicTensor<T>& grad_output) {
  const Shape& s = grad_output.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) throw ContractError("upsample_2x2_backward: gradient dims must be even");
  BasicTensor<T> g({s.n, s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) g.at(n, c, y / 2, x / 2) += grad_output.at(n, c, y, x);
  return g;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ContractError("concat_channels: incompatible shapes " + sa.str() + " and " + sb.str());
  }
  BasicTensor<T> out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = sa.plane();
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0).data(), plane * sa.c, out.plane(n, 0).data());
    std::copy_n(b.plane(n, 0).data(), plane * sb.c, out.plane(n, sa.c).data());
  }
  return out;
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, int begin, int count) {
  const Shape& s = t.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw ContractError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                        ") outside " + std::to_string(s.c) + " channels");
  }
  BasicTensor<T> out({s.n, count, s.h, s.w});
  for (int n = 0; n < s.n; ++n) std::copy_n(t.plane(n, begin).data(), s.plane() * count, out.plane(n, 0).data());
  return out;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> concat_channels_backward(const BasicTensor<T>& grad_output, int channels_a) {
  return {slice_channels(grad_output, 0, channels_a),
          slice_channels(grad_output, channels_a, grad_output.shape().c - channels_a)};
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
  if (kind == Activation::kLinear) return input;
  BasicTensor<T> out(input.shape());
  const T slope = kind == Activation::kLeakyRelu ? static_cast<T>(kLeakySlope) : T{0};
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? input[i] : slope * input[i];
  return out;
}

template <typename T>
BasicTensor<T> activation_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output, Activation kind) {
  if (input.shape() != grad_output.shape()) throw ContractError("activation_backward: shape mismatch");
  if (kind == Activation::kLinear) return grad_output;
  BasicTensor<T> g(input.shape());
  const T slope = kind == Activation::kLeakyRelu ? static_cast<T>(kLeakySlope) : T{0};
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > T{0} ? grad_output[i] : slope * grad_output[i];
  return g;
}

template <typename T>
BasicTensor<T> reflection_pad(const BasicTensor<T>& input, const PadAmounts& pad) {
  const Shape& s = input.shape();
  if (pad.top < 0 || pad.bottom < 0 || pad.left < 0 || pad.right < 0) {
    throw ContractError("reflection_pad: negative pad amount");
  }
  if (std::max(pad.top, pad.bottom) >= s.h || std::max(pad.left, pad.right) >= s.w) {
    throw ContractError("reflection_pad: pad amounts must be smaller than the input extent " + std::to_string(s.h) +
                        "x" + std::to_string(s.w));
  }
  const int oh = s.h + pad.top + pad.bottom;
  const int ow = s.w + pad.left + pad.right;
  BasicTensor<T> out({s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < oh; ++y) {
        const int sy = reflect_index(y - pad.top, s.h);
        for (int x = 0; x < ow; ++x) out.at(n, c, y, x) = input.at(n, c, sy, reflect_index(x - pad.left, s.w));
      }
  return out;
}

template <typename T>
BasicTensor<T> reflection_pad_backward(const BasicTensor<T>& grad_output, const PadAmounts& pad,
                                       const Shape& input_shape) {
  const Shape& s = grad_output.shape();
  if (s.h != input_shape.h + pad.top + pad.bottom || s.w != input_shape.w + pad.left + pad.right) {
    throw ContractError("reflection_pad_backward: gradient shape does not match pad amounts");
  }
  BasicTensor<T> g(input_shape);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y) {
        const int sy = reflect_index(y - pad.top, input_shape.h);
        for (int x = 0; x < s.w; ++x)
          g.at(n, c, sy, reflect_index(x - pad.left, input_shape.w)) += grad_output.at(n, c, y, x);
      }
  return g;
}

template <typename T>
BasicTensor<T> zero_pad(const BasicTensor<T>& input, const PadAmounts& pad) {
  const Shape& s = input.shape();
  BasicTensor<T> out({s.n, s.c, s.h + pad.top + pad.bottom, s.w + pad.left + pad.right});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        std::copy_n(input.plane(n, c).data() + static_cast<std::size_t>(y) * s.w, s.w,
                    &out.at(n, c, y + pad.top, pad.left));
  return out;
}

template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& input, const PadAmounts& pad) {
  const Shape& s = input.shape();
  const int oh = s.h - pad.top - pad.bottom;
  const int ow = s.w - pad.left - pad.right;
  if (oh < 1 || ow < 1) throw ContractError("crop: amounts exceed tensor extent");
  BasicTensor<T> out({s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < oh; ++y)
        std::copy_n(input.plane(n, c).data() + static_cast<std::size_t>(y + pad.top) * s.w + pad.left, ow, out.plane(n, c).data() + static_cast<std::size_t>(y) * ow);
  return out;
}

template <typename T>
BasicTensor<T> batch_norm_train(const BasicTensor<T>& input, std::span<const T> gamma, std::span<const T> beta, T eps,
                                BatchNormCache<T>* cache, BatchNormStats<T>* stats) {
  const Shape& s = input.shape();
  const std::size_t per_channel = static_cast<std::size_t>(s.n) * s.plane();
  BasicTensor<T> out(s);
  BatchNormCache<T> local;
  local.normalized = BasicTensor<T>(s);
  local.inv_std.resize(s.c);
  if (stats) {
    stats->mean.assign(s.c, T{0});
    stats->var.assign(s.c, T{0});
  }
  for (int c = 0; c < s.c; ++c) {
    // Accumulate in double so float batches stay reproducible and well-conditioned.
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (const T v : input.plane(n, c)) sum += v;
    const double mean = sum / static_cast<double>(per_channel);
    double sq = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (const T v : input.plane(n, c)) sq += (v - mean) * (v - mean);
    const double var = sq / static_cast<double>(per_channel);
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + eps));
    local.inv_std[c] = inv_std;
    if (stats) {
      stats->mean[c] = static_cast<T>(mean);
      stats->var[c] = static_cast<T>(var);
    }
    for (int n = 0; n < s.n; ++n) {
      const auto src = input.plane(n, c);
      auto xhat = local.normalized.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        xhat[i] = static_cast<T>((src[i] - mean) * inv_std);
        dst[i] = gamma[c] * xhat[i] + beta[c];
      }
    }
  }
  if (cache) *cache = std::move(local);
  return out;
}

template <typename T>
BasicTensor<T> batch_norm_inference(const BasicTensor<T>& input, std::span<const T> gamma, std::span<const T> beta,
                                    std::span<const T> running_mean, std::span<const T> running_var, T eps) {
  const Shape& s = input.shape();
  BasicTensor<T> out(s);
  for (int c = 0; c < s.c; ++c) {
    const T scale = gamma[c] / std::sqrt(running_var[c] + eps);
    const T shift = beta[c] - running_mean[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale + shift;
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batch_norm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                                      const BasicTensor<T>& grad_output) {
  const Shape& s = grad_output.shape();
  const double count = static_cast<double>(s.n) * static_cast<double>(s.plane());
  BatchNormGrads<T> g{BasicTensor<T>(s), std::vector<T>(s.c), std::vector<T>(s.c)};
  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const auto go = grad_output.plane(n, c);
      const auto xhat = cache.normalized.plane(n, c);
      for (std::size_t i = 0; i < go.size(); ++i) {
        sum_g += go[i];
        sum_gx += static_cast<double>(go[i]) * xhat[i];
      }
    }
    g.beta[c] = static_cast<T>(sum_g);
    g.gamma[c] = static_cast<T>(sum_gx);
    const double k = static_cast<double>(gamma[c]) * cache.inv_std[c];
    const double mean_g = sum_g / count;
    const double mean_gx = sum_gx / count;
    for (int n = 0; n < s.n; ++n) {
      const auto go = grad_output.plane(n, c);
      const auto xhat = cache.normalized.plane(n, c);
      auto dx = g.input.plane(n, c);
      for (std::size_t i = 0; i < go.size(); ++i) dx[i] = static_cast<T>(k * (go[i] - mean_g - xhat[i] * mean_gx));
    }
  }
  return g;
}

#define POSTMIMIC_INSTANTIATE_OPS(T)                                                                                  \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, std::span<const T>, int, Padding);     \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, int, Padding,                 \
                                          const BasicTensor<T>&, bool);                                               \
  template PoolResult<T> max_pool_2x2(const BasicTensor<T>&);                                                         \
  template BasicTensor<T> max_pool_2x2_backward(const BasicTensor<T>&, std::span<const std::uint32_t>, const Shape&); \
  template BasicTensor<T> upsample_2x2(const BasicTensor<T>&);                                                        \
  template BasicTensor<T> upsample_2x2_backward(const BasicTensor<T>&);                                               \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, int, int);                                            \
  template std::pair<BasicTensor<T>, BasicTensor<T>> concat_channels_backward(const BasicTensor<T>&, int);            \
  template BasicTensor<T> activation(const BasicTensor<T>&, Activation);                                              \
  template BasicTensor<T> activation_backward(const BasicTensor<T>&, const BasicTensor<T>&, Activation);              \
  template BasicTensor<T> reflection_pad(const BasicTensor<T>&, const PadAmounts&);                                   \
  template BasicTensor<T> reflection_pad_backward(const BasicTensor<T>&, const PadAmounts&, const Shape&);            \
  template BasicTensor<T> zero_pad(const BasicTensor<T>&, const PadAmounts&);                                         \
  template BasicTensor<T> crop(const BasicTensor<T>&, const PadAmounts&);                                             \
  template BasicTensor<T> batch_norm_train(const BasicTensor<T>&, std::span<const T>, std::span<const T>, T,          \
                                           BatchNormCache<T>*, BatchNormStats<T>*);                                   \
  template BasicTensor<T> batch_norm_inference(const BasicTensor<T>&, std::span<const T>, std::span<const T>,         \
                                               std::span<const T>, std::span<const T>, T);                            \
  template BatchNormGrads<T> batch_norm_backward(const BatchNormCache<T>&, std::span<const T>, const BasicTensor<T>&);

POSTMIMIC_INSTANTIATE_OPS(float)
POSTMIMIC_INSTANTIATE_OPS(double)

#undef POSTMIMIC_INSTANTIATE_OPS

}  // namespace postmimic::nn
