#pragma once

#include <cstdint>
#include <memory>

#include "postmimic/models/network.hpp"

namespace postmimic::models {

/// A single 1x1 conv (one weight, one bias): y = w * x + b per pixel.
class PointwiseLinear final : public Network {
 public:
  explicit PointwiseLinear(std::uint64_t seed);

  float weight() const { return params()[0]->value[0]; }
  float bias() const { return params()[1]->value[0]; }

  std::string kind() const override { return "linear"; }
  nlohmann::json config_json() const override { return {{"kind", "linear"}}; }
  std::unique_ptr<Network> clone() const override { return std::make_unique<PointwiseLinear>(*this); }

  nn::Tensor backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads = true) override;
  std::vector<Param*> params() override;
  std::vector<const Param*> params() const override;
  int spatial_divisor() const override { return 1; }
  nn::Shape output_shape(const nn::Shape& input) const override { return unit_.output_shape(input); }
  std::int64_t multiply_accumulates(const nn::Shape& input) const override {
    return unit_.multiply_accumulates(input);
  }

 protected:
  nn::Tensor run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const override;
  void apply_running_stats(const Tape&) override {}

 private:
  ConvUnit unit_;
};

/// Parameter-free pass-through; a reference point for evaluation.
class IdentityModel final : public Network {
 public:
  std::string kind() const override { return "identity"; }
  nlohmann::json config_json() const override { return {{"kind", "identity"}}; }
  std::unique_ptr<Network> clone() const override { return std::make_unique<IdentityModel>(); }
  nn::Tensor backward(const Tape&, const nn::Tensor& grad_output, bool) override { return grad_output; }
  std::vector<Param*> params() override { return {}; }
  std::vector<const Param*> params() const override { return {}; }
  int spatial_divisor() const override { return 1; }
  nn::Shape output_shape(const nn::Shape& input) const override { return input; }
  std::int64_t multiply_accumulates(const nn::Shape&) const override { return 0; }

 protected:
  nn::Tensor run(const nn::Tensor& x, Phase, std::unique_ptr<Tape>* tape) const override;
  void apply_running_stats(const Tape&) override {}
};

/// Builds a network from its config record ("kind": unet | patch_discriminator | linear | identity).
std::unique_ptr<Network> make_network(const nlohmann::json& config, std::uint64_t seed);

}  // namespace postmimic::models
