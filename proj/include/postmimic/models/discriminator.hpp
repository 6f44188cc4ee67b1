#pragma once

#include <cstdint>
#include <vector>

#include "postmimic/models/network.hpp"

namespace postmimic::models {

/// Patch discriminator: `strided_blocks` stride-2 conv units (leaky ReLU 0.2,
/// batch norm on all but the first) and a stride-1, 1-channel linear head.
/// Channels double per block from `base_channels`, capped at 8x.
struct DiscriminatorConfig {
  int strided_blocks = 3;
  int base_channels = 16;
  int kernel_extent = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
};

class Discriminator final : public Network {
 public:
  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }

  std::string kind() const override { return "patch_discriminator"; }
  nlohmann::json config_json() const override { return config_.to_json(); }
  std::unique_ptr<Network> clone() const override { return std::make_unique<Discriminator>(*this); }

  nn::Tensor backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads = true) override;

  std::vector<Param*> params() override;
  std::vector<const Param*> params() const override;

  int spatial_divisor() const override { return 1 << config_.strided_blocks; }
  nn::Shape output_shape(const nn::Shape& input) const override;
  std::int64_t multiply_accumulates(const nn::Shape& input) const override;

 protected:
  nn::Tensor run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const override;
  void apply_running_stats(const Tape& tape) override;

 private:
  DiscriminatorConfig config_;
  std::vector<ConvUnit> units_;
};

}  // namespace postmimic::models
