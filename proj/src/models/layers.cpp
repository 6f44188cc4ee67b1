#include "postmimic/models/layers.hpp"

#include <cmath>

namespace postmimic::models {

Param::Param(std::string name_, ParamKind kind_, nn::Shape shape_, float fill)
    : name(std::move(name_)), kind(kind_), shape(shape_), value(shape_.count(), fill), grad(shape_.count(), 0.0f) {}

ConvUnit::ConvUnit(std::string name, ConvUnitSpec spec) : spec_(spec) {
  if (spec_.in_channels < 1 || spec_.out_channels < 1 || spec_.kernel.height < 1 || spec_.kernel.width < 1 ||
      spec_.stride < 1) {
    throw ContractError("ConvUnit " + name + ": invalid spec");
  }
  weight_ = Param(name + ".weight", ParamKind::kTrainable, kernel_shape());
  bias_ = Param(name + ".bias", ParamKind::kTrainable, {1, 1, 1, spec_.out_channels});
  if (spec_.batch_norm) {
    const nn::Shape per_channel{1, 1, 1, spec_.out_channels};
    gamma_ = Param(name + ".bn.gamma", ParamKind::kTrainable, per_channel, 1.0f);
    beta_ = Param(name + ".bn.beta", ParamKind::kTrainable, per_channel);
    running_mean_ = Param(name + ".bn.running_mean", ParamKind::kBuffer, per_channel);
    running_var_ = Param(name + ".bn.running_var", ParamKind::kBuffer, per_channel, 1.0f);
  }
}

nn::Shape ConvUnit::kernel_shape() const {
  return {spec_.out_channels, spec_.in_channels, spec_.kernel.height, spec_.kernel.width};
}

void ConvUnit::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(spec_.in_channels) * spec_.kernel.height * spec_.kernel.width;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (float& w : weight_.value) w = static_cast<float>(stddev * rng.normal());
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
  if (spec_.batch_norm) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
    std::fill(beta_.value.begin(), beta_.value.end(), 0.0f);
    std::fill(running_mean_.value.begin(), running_mean_.value.end(), 0.0f);
    std::fill(running_var_.value.begin(), running_var_.value.end(), 1.0f);
  }
}

nn::Tensor ConvUnit::forward(const nn::Tensor& x, Phase phase, Cache* cache) const {
  const nn::Tensor kernels(kernel_shape(), weight_.value);
  nn::Tensor z = nn::conv2d<float>(x, kernels, bias_.value, spec_.stride, spec_.padding);
  if (cache) cache->input = x;
  if (spec_.batch_norm) {
    if (phase == Phase::kInference) {
      z = nn::batch_norm_inference<float>(z, gamma_.value, beta_.value, running_mean_.value, running_var_.value,
                                          kBatchNormEpsilon);
    } else {
      z = nn::batch_norm_train<float>(z, gamma_.value, beta_.value, kBatchNormEpsilon, cache ? &cache->norm : nullptr,
                                      cache ? &cache->batch_stats : nullptr);
    }
  }
  if (cache && spec_.activation != nn::Activation::kLinear) cache->pre_activation = z;
  return nn::activation(z, spec_.activation);
}

nn::Tensor ConvUnit::backward(const Cache& cache, const nn::Tensor& grad_output, bool param_grads) {
  nn::Tensor g = spec_.activation == nn::Activation::kLinear
                     ? grad_output
                     : nn::activation_backward(cache.pre_activation, grad_output, spec_.activation);
  if (spec_.batch_norm) {
    nn::BatchNormGrads<float> bn = nn::batch_norm_backward<float>(cache.norm, gamma_.value, g);
    if (param_grads) {
      for (std::size_t c = 0; c < bn.gamma.size(); ++c) {
        gamma_.grad[c] += bn.gamma[c];
        beta_.grad[c] += bn.beta[c];
      }
    }
    g = std::move(bn.input);
  }
  const nn::Tensor kernels(kernel_shape(), weight_.value);
  nn::Conv2dGrads<float> cg = nn::conv2d_backward<float>(cache.input, kernels, spec_.stride, spec_.padding, g, true);
  if (param_grads) {
    for (std::size_t i = 0; i < weight_.grad.size(); ++i) weight_.grad[i] += cg.kernels[i];
    for (std::size_t i = 0; i < bias_.grad.size(); ++i) bias_.grad[i] += cg.bias[i];
  }
  return std::move(cg.input);
}

void ConvUnit::update_running_stats(const Cache& cache) {
  if (!spec_.batch_norm || cache.batch_stats.mean.empty()) return;
  for (int c = 0; c < spec_.out_channels; ++c) {
    running_mean_.value[c] = kBatchNormMomentum * running_mean_.value[c] + (1.0f - kBatchNormMomentum) * cache.batch_stats.mean[c];
    running_var_.value[c] = kBatchNormMomentum * running_var_.value[c] + (1.0f - kBatchNormMomentum) * cache.batch_stats.var[c];
  }
}

void ConvUnit::collect(std::vector<Param*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
  if (spec_.batch_norm) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }
}

void ConvUnit::collect(std::vector<const Param*>& out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
  if (spec_.batch_norm) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }
}

nn::Shape ConvUnit::output_shape(const nn::Shape& input) const {
  return nn::conv2d_output_shape(input, kernel_shape(), spec_.stride, spec_.padding);
}

std::int64_t ConvUnit::multiply_accumulates(const nn::Shape& input) const {
  const nn::Shape out = output_shape(input);
  return static_cast<std::int64_t>(out.n) * out.h * out.w * spec_.out_channels * spec_.in_channels *
         spec_.kernel.height * spec_.kernel.width;
}

}  // namespace postmimic::models
