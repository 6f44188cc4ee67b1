#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/models/layers.hpp"

namespace postmimic::models {

/// Activations recorded by a training-mode forward pass, consumed by backward.
struct Tape {
  virtual ~Tape() = default;
};

/// Parameter count and inference cost for one input shape.
struct ModelSummary {
  std::int64_t parameter_count = 0;
  std::int64_t multiply_accumulates = 0;
  /// 2 x multiply-accumulates over conv layers; pooling and activations excluded.
  std::int64_t flops = 0;
};

struct ManifestEntry {
  std::string name;
  ParamKind kind = ParamKind::kTrainable;
  nn::Shape shape;
  std::size_t offset_bytes = 0;
  std::size_t count = 0;
};

/// Common interface of every trainable image network.
class Network {
 public:
  virtual ~Network() = default;

  virtual std::string kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual std::unique_ptr<Network> clone() const = 0;

  /// Training-mode forward: records a tape when requested and, in Phase::kTrain,
  /// folds batch statistics into the running averages.
  nn::Tensor forward(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape = nullptr);
  /// Inference-mode forward; never mutates the network.
  nn::Tensor infer(const nn::Tensor& x) const { return run(x, Phase::kInference, nullptr); }
  /// Back-propagates `grad_output`, accumulating into Param::grad when
  /// `param_grads`, and returns the gradient with respect to the input.
  virtual nn::Tensor backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads = true) = 0;

  virtual std::vector<Param*> params() = 0;
  virtual std::vector<const Param*> params() const = 0;

  /// Input spatial dims must be multiples of this.
  virtual int spatial_divisor() const = 0;
  virtual nn::Shape output_shape(const nn::Shape& input) const = 0;
  virtual std::int64_t multiply_accumulates(const nn::Shape& input) const = 0;

  void zero_grad();
  void require_divisible(const nn::Shape& input) const;

 protected:
  virtual nn::Tensor run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const = 0;
  virtual void apply_running_stats(const Tape& tape) = 0;
};

/// Scalar trainable parameters (weights, biases, normalization scale/shift).
std::int64_t count_params(const Network& net);
ModelSummary estimate_flops(const Network& net, const nn::Shape& input);
/// Trainable parameters and buffers in declaration order with float32 byte offsets.
std::vector<ManifestEntry> manifest(const Network& net);
/// FNV-1a over every parameter and buffer value; equal hashes mean equal bits.
std::uint64_t parameter_hash(const Network& net);

std::string to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

}  // namespace postmimic::models
