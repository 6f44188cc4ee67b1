#include "postmimic/models/discriminator.hpp"

#include <algorithm>
#include <string>

namespace postmimic::models {
namespace {

struct DiscriminatorTape final : Tape {
  std::vector<ConvUnit::Cache> caches;
};

}  // namespace

void DiscriminatorConfig::validate() const {
  if (strided_blocks < 1) throw ContractError("DiscriminatorConfig: strided_blocks must be >= 1");
  if (base_channels < 1) throw ContractError("DiscriminatorConfig: base_channels must be >= 1");
  if (kernel_extent < 1) throw ContractError("DiscriminatorConfig: kernel_extent must be >= 1");
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"kind", "patch_discriminator"},
          {"strided_blocks", strided_blocks},
          {"base_channels", base_channels},
          {"kernel_extent", kernel_extent}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.strided_blocks = j.value("strided_blocks", c.strided_blocks);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.kernel_extent = j.value("kernel_extent", c.kernel_extent);
  c.validate();
  return c;
}

Discriminator::Discriminator(const DiscriminatorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const KernelExtent k{config_.kernel_extent, config_.kernel_extent};
  int in = 1;
  for (int b = 0; b < config_.strided_blocks; ++b) {
    const int out = config_.base_channels * (1 << std::min(b, 3));
    units_.emplace_back("block" + std::to_string(b),
                        ConvUnitSpec{in, out, k, 2, nn::Padding::kZero, b > 0, nn::Activation::kLeakyRelu});
    in = out;
  }
  units_.emplace_back("head", ConvUnitSpec{in, 1, k, 1, nn::Padding::kZero, false, nn::Activation::kLinear});
  Rng rng(seed);
  for (ConvUnit& u : units_) u.initialize(rng);
}

nn::Tensor Discriminator::run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const {
  require_divisible(x.shape());
  auto t = tape ? std::make_unique<DiscriminatorTape>() : nullptr;
  if (t) t->caches.resize(units_.size());
  nn::Tensor h = x;
  for (std::size_t i = 0; i < units_.size(); ++i) h = units_[i].forward(h, phase, t ? &t->caches[i] : nullptr);
  if (tape) *tape = std::move(t);
  return h;
}

void Discriminator::apply_running_stats(const Tape& tape) {
  const auto& t = dynamic_cast<const DiscriminatorTape&>(tape);
  for (std::size_t i = 0; i < units_.size(); ++i) units_[i].update_running_stats(t.caches[i]);
}

nn::Tensor Discriminator::backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads) {
  const auto& t = dynamic_cast<const DiscriminatorTape&>(tape);
  nn::Tensor g = grad_output;
  for (std::size_t i = units_.size(); i-- > 0;) g = units_[i].backward(t.caches[i], g, param_grads);
  return g;
}

std::vector<Param*> Discriminator::params() {
  std::vector<Param*> out;
  for (ConvUnit& u : units_) u.collect(out);
  return out;
}

std::vector<const Param*> Discriminator::params() const {
  std::vector<const Param*> out;
  for (const ConvUnit& u : units_) u.collect(out);
  return out;
}

nn::Shape Discriminator::output_shape(const nn::Shape& input) const {
  require_divisible(input);
  nn::Shape s = input;
  for (const ConvUnit& u : units_) s = u.output_shape(s);
  return s;
}

std::int64_t Discriminator::multiply_accumulates(const nn::Shape& input) const {
  require_divisible(input);
  std::int64_t total = 0;
  nn::Shape s = input;
  for (const ConvUnit& u : units_) {
    total += u.multiply_accumulates(s);
    s = u.output_shape(s);
  }
  return total;
}

}  // namespace postmimic::models
