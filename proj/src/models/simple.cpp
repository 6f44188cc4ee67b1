#include "postmimic/models/simple.hpp"

#include "postmimic/models/discriminator.hpp"
#include "postmimic/models/generator.hpp"

namespace postmimic::models {
namespace {

struct UnitTape final : Tape {
  ConvUnit::Cache cache;
};

ConvUnitSpec pointwise_spec() { return {1, 1, {1, 1}, 1, nn::Padding::kZero, false, nn::Activation::kLinear}; }

}  // namespace

PointwiseLinear::PointwiseLinear(std::uint64_t seed) : unit_("proj", pointwise_spec()) {
  Rng rng(seed);
  unit_.initialize(rng);
}

nn::Tensor PointwiseLinear::run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const {
  if (!tape) return unit_.forward(x, phase, nullptr);
  auto t = std::make_unique<UnitTape>();
  nn::Tensor y = unit_.forward(x, phase, &t->cache);
  *tape = std::move(t);
  return y;
}

nn::Tensor PointwiseLinear::backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads) {
  return unit_.backward(dynamic_cast<const UnitTape&>(tape).cache, grad_output, param_grads);
}

std::vector<Param*> PointwiseLinear::params() {
  std::vector<Param*> out;
  unit_.collect(out);
  return out;
}

std::vector<const Param*> PointwiseLinear::params() const {
  std::vector<const Param*> out;
  unit_.collect(out);
  return out;
}

nn::Tensor IdentityModel::run(const nn::Tensor& x, Phase, std::unique_ptr<Tape>* tape) const {
  if (tape) *tape = std::make_unique<Tape>();
  return x;
}

std::unique_ptr<Network> make_network(const nlohmann::json& config, std::uint64_t seed) {
  const std::string kind = config.value("kind", std::string("unet"));
  if (kind == "unet") return std::make_unique<Generator>(GeneratorConfig::from_json(config), seed);
  if (kind == "patch_discriminator") {
    return std::make_unique<Discriminator>(DiscriminatorConfig::from_json(config), seed);
  }
  if (kind == "linear") return std::make_unique<PointwiseLinear>(seed);
  if (kind == "identity") return std::make_unique<IdentityModel>();
  throw ContractError("unknown network kind '" + kind + "'");
}

}  // namespace postmimic::models
