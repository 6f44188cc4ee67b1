#pragma once

#include <cstdint>
#include <vector>

#include "postmimic/models/network.hpp"

namespace postmimic::models {

enum class OutputActivation { kLinear, kClamped };

/// Encoder-decoder with skip connections.
///
/// Each encoder level is two conv units (conv, batch norm, ReLU) followed by
/// a 2x2 max pool; a two-unit bottleneck follows; each decoder level
/// upsamples, concatenates the matching encoder features and applies two conv
/// units; a 1x1 linear projection gives the single output channel.
struct GeneratorConfig {
  int levels = 4;
  std::vector<int> channels_per_level{16, 16, 16, 16};
  /// (axial/height, lateral/width)
  KernelExtent kernel{3, 3};
  OutputActivation output_activation = OutputActivation::kLinear;

  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);

  /// 3x3 kernels.
  static GeneratorConfig small();
  /// Same topology with 7x3 kernels (7 axial, 3 lateral).
  static GeneratorConfig axial();
};

class Generator final : public Network {
 public:
  Generator(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }

  std::string kind() const override { return "unet"; }
  nlohmann::json config_json() const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<Generator>(*this); }

  nn::Tensor backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads = true) override;

  std::vector<Param*> params() override;
  std::vector<const Param*> params() const override;

  int spatial_divisor() const override { return 1 << config_.levels; }
  nn::Shape output_shape(const nn::Shape& input) const override;
  std::int64_t multiply_accumulates(const nn::Shape& input) const override;

  /// Feature-map shape after encoder level `level` (before pooling).
  nn::Shape encoder_shape(const nn::Shape& input, int level) const;

 protected:
  nn::Tensor run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const override;
  void apply_running_stats(const Tape& tape) override;

 private:
  GeneratorConfig config_;
  // Order: encoder (2 per level), bottleneck (2), decoder (2 per level, deepest first), head.
  std::vector<ConvUnit> units_;
};

}  // namespace postmimic::models
