#pragma once

#include <string>
#include <vector>

#include "postmimic/nn/ops.hpp"
#include "postmimic/random.hpp"

namespace postmimic::models {

enum class ParamKind { kTrainable, kBuffer };

/// A named parameter (or non-trainable buffer such as running statistics).
struct Param {
  std::string name;
  ParamKind kind = ParamKind::kTrainable;
  nn::Shape shape;
  std::vector<float> value;
  std::vector<float> grad;

  Param() = default;
  Param(std::string name, ParamKind kind, nn::Shape shape, float fill = 0.0f);
  std::size_t count() const { return value.size(); }
};

enum class Phase {
  kInference,         // running statistics, no updates
  kTrain,             // batch statistics, running statistics updated
  kTrainFrozenStats,  // batch statistics, running statistics untouched
};

struct KernelExtent {
  int height = 3;
  int width = 3;
  friend bool operator==(const KernelExtent&, const KernelExtent&) = default;
};

struct ConvUnitSpec {
  int in_channels = 1;
  int out_channels = 1;
  KernelExtent kernel;
  int stride = 1;
  nn::Padding padding = nn::Padding::kZero;
  bool batch_norm = false;
  nn::Activation activation = nn::Activation::kLinear;
};

inline constexpr float kBatchNormEpsilon = 1e-3f;
inline constexpr float kBatchNormMomentum = 0.99f;

/// conv2d -> optional batch norm -> activation.
class ConvUnit {
 public:
  struct Cache {
    nn::Tensor input;
    nn::BatchNormCache<float> norm;
    nn::BatchNormStats<float> batch_stats;
    nn::Tensor pre_activation;
  };

  ConvUnit(std::string name, ConvUnitSpec spec);

  const ConvUnitSpec& spec() const { return spec_; }

  /// Kernels ~ N(0, 2 / fan_in), zero biases, unit gamma.
  void initialize(Rng& rng);

  nn::Tensor forward(const nn::Tensor& x, Phase phase, Cache* cache) const;
  /// Accumulates parameter gradients (when `param_grads`) and returns the input gradient.
  nn::Tensor backward(const Cache& cache, const nn::Tensor& grad_output, bool param_grads);
  void update_running_stats(const Cache& cache);

  void collect(std::vector<Param*>& out);
  void collect(std::vector<const Param*>& out) const;

  nn::Shape output_shape(const nn::Shape& input) const;
  std::int64_t multiply_accumulates(const nn::Shape& input) const;

 private:
  nn::Shape kernel_shape() const;

  ConvUnitSpec spec_;
  Param weight_;
  Param bias_;
  Param gamma_;
  Param beta_;
  Param running_mean_;
  Param running_var_;
};

}  // namespace postmimic::models
