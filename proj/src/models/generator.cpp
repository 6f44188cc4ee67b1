#include "postmimic/models/generator.hpp"

#include <algorithm>
#include <string>

namespace postmimic::models {
namespace {

struct GeneratorTape final : Tape {
  std::vector<ConvUnit::Cache> caches;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<nn::Shape> pool_inputs;
  nn::Tensor head_output;
};

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "linear") return OutputActivation::kLinear;
  if (s == "clamped") return OutputActivation::kClamped;
  throw ContractError("GeneratorConfig: unknown output_activation '" + s + "'");
}

}  // namespace

void GeneratorConfig::validate() const {
  if (levels < 1) throw ContractError("GeneratorConfig: levels must be >= 1, got " + std::to_string(levels));
  if (channels_per_level.size() != static_cast<std::size_t>(levels)) {
    throw ContractError("GeneratorConfig: channels_per_level has " + std::to_string(channels_per_level.size()) +
                        " entries for " + std::to_string(levels) + " levels");
  }
  for (const int c : channels_per_level) {
    if (c < 1) throw ContractError("GeneratorConfig: channel counts must be >= 1");
  }
  if (kernel.height < 1 || kernel.width < 1) throw ContractError("GeneratorConfig: kernel extents must be >= 1");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"kind", "unet"},
          {"levels", levels},
          {"channels_per_level", channels_per_level},
          {"kernel", {kernel.height, kernel.width}},
          {"output_activation", output_activation == OutputActivation::kLinear ? "linear" : "clamped"}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.levels = j.value("levels", c.levels);
  c.channels_per_level = j.value("channels_per_level", std::vector<int>(static_cast<std::size_t>(c.levels), 16));
  if (j.contains("kernel")) {
    const auto k = j.at("kernel").get<std::vector<int>>();
    if (k.size() != 2) throw ContractError("GeneratorConfig: kernel must be [height, width]");
    c.kernel = {k[0], k[1]};
  }
  c.output_activation = output_activation_from_string(j.value("output_activation", std::string("linear")));
  c.validate();
  return c;
}

GeneratorConfig GeneratorConfig::small() { return GeneratorConfig{}; }

GeneratorConfig GeneratorConfig::axial() {
  GeneratorConfig c;
  c.kernel = {7, 3};
  return c;
}

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto unit = [&](const std::string& name, int in, int out) {
    units_.emplace_back(name, ConvUnitSpec{in, out, config_.kernel, 1, nn::Padding::kZero, true, nn::Activation::kRelu});
  };
  int in = 1;
  for (int i = 0; i < config_.levels; ++i) {
    const int c = config_.channels_per_level[i];
    unit("enc" + std::to_string(i) + ".conv0", in, c);
    unit("enc" + std::to_string(i) + ".conv1", c, c);
    in = c;
  }
  unit("bottleneck.conv0", in, in);
  unit("bottleneck.conv1", in, in);
  for (int i = config_.levels - 1; i >= 0; --i) {
    const int c = config_.channels_per_level[i];
    unit("dec" + std::to_string(i) + ".conv0", in + c, c);
    unit("dec" + std::to_string(i) + ".conv1", c, c);
    in = c;
  }
  units_.emplace_back("head", ConvUnitSpec{in, 1, {1, 1}, 1, nn::Padding::kZero, false, nn::Activation::kLinear});
  Rng rng(seed);
  for (ConvUnit& u : units_) u.initialize(rng);
}

nlohmann::json Generator::config_json() const { return config_.to_json(); }

nn::Tensor Generator::run(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) const {
  require_divisible(x.shape());
  if (x.shape().c != 1) throw ContractError("Generator: expected 1 input channel, got " + std::to_string(x.shape().c));
  auto t = tape ? std::make_unique<GeneratorTape>() : nullptr;
  if (t) {
    t->caches.resize(units_.size());
    t->argmax.resize(config_.levels);
    t->pool_inputs.resize(config_.levels);
  }
  const auto cache = [&](std::size_t i) { return t ? &t->caches[i] : nullptr; };

  std::size_t u = 0;
  nn::Tensor h = x;
  std::vector<nn::Tensor> skips;
  for (int level = 0; level < config_.levels; ++level) {
    h = units_[u].forward(h, phase, cache(u));
    ++u;
    h = units_[u].forward(h, phase, cache(u));
    ++u;
    skips.push_back(h);
    nn::PoolResult<float> pooled = nn::max_pool_2x2(h);
    if (t) {
      t->argmax[level] = std::move(pooled.argmax);
      t->pool_inputs[level] = h.shape();
    }
    h = std::move(pooled.output);
  }
  for (int i = 0; i < 2; ++i, ++u) h = units_[u].forward(h, phase, cache(u));
  for (int level = config_.levels - 1; level >= 0; --level) {
    h = nn::concat_channels(nn::upsample_2x2(h), skips[level]);
    h = units_[u].forward(h, phase, cache(u));
    ++u;
    h = units_[u].forward(h, phase, cache(u));
    ++u;
  }
  h = units_[u].forward(h, phase, cache(u));
  if (config_.output_activation == OutputActivation::kClamped) {
    if (t) t->head_output = h;
    for (float& v : h.data()) v = std::clamp(v, 0.0f, 1.0f);
  }
  if (tape) *tape = std::move(t);
  return h;
}

void Generator::apply_running_stats(const Tape& tape) {
  const auto& t = dynamic_cast<const GeneratorTape&>(tape);
  for (std::size_t i = 0; i < units_.size(); ++i) units_[i].update_running_stats(t.caches[i]);
}

nn::Tensor Generator::backward(const Tape& tape, const nn::Tensor& grad_output, bool param_grads) {
  const auto& t = dynamic_cast<const GeneratorTape&>(tape);
  nn::Tensor g = grad_output;
  if (config_.output_activation == OutputActivation::kClamped) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const float z = t.head_output[i];
      if (z < 0.0f || z > 1.0f) g[i] = 0.0f;
    }
  }
  std::size_t u = units_.size() - 1;
  g = units_[u].backward(t.caches[u], g, param_grads);
  std::vector<nn::Tensor> skip_grads(config_.levels);
  for (int level = 0; level < config_.levels; ++level) {
    --u;
    g = units_[u].backward(t.caches[u], g, param_grads);
    --u;
    g = units_[u].backward(t.caches[u], g, param_grads);
    const int up_channels = g.shape().c - config_.channels_per_level[level];
    auto [g_up, g_skip] = nn::concat_channels_backward(g, up_channels);
    skip_grads[level] = std::move(g_skip);
    g = nn::upsample_2x2_backward(g_up);
  }
  for (int i = 0; i < 2; ++i) {
    --u;
    g = units_[u].backward(t.caches[u], g, param_grads);
  }
  for (int level = config_.levels - 1; level >= 0; --level) {
    g = nn::max_pool_2x2_backward<float>(g, t.argmax[level], t.pool_inputs[level]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += skip_grads[level][i];
    --u;
    g = units_[u].backward(t.caches[u], g, param_grads);
    --u;
    g = units_[u].backward(t.caches[u], g, param_grads);
  }
  return g;
}

std::vector<Param*> Generator::params() {
  std::vector<Param*> out;
  for (ConvUnit& u : units_) u.collect(out);
  return out;
}

std::vector<const Param*> Generator::params() const {
  std::vector<const Param*> out;
  for (const ConvUnit& u : units_) u.collect(out);
  return out;
}

nn::Shape Generator::output_shape(const nn::Shape& input) const {
  require_divisible(input);
  return {input.n, 1, input.h, input.w};
}

nn::Shape Generator::encoder_shape(const nn::Shape& input, int level) const {
  require_divisible(input);
  if (level < 0 || level >= config_.levels) throw ContractError("Generator: encoder level out of range");
  return {input.n, config_.channels_per_level[level], input.h >> level, input.w >> level};
}

std::int64_t Generator::multiply_accumulates(const nn::Shape& input) const {
  require_divisible(input);
  std::int64_t total = 0;
  std::size_t u = 0;
  nn::Shape s = input;
  std::vector<nn::Shape> skips;
  for (int level = 0; level < config_.levels; ++level) {
    for (int i = 0; i < 2; ++i, ++u) {
      total += units_[u].multiply_accumulates(s);
      s = units_[u].output_shape(s);
    }
    skips.push_back(s);
    s.h /= 2;
    s.w /= 2;
  }
  for (int i = 0; i < 2; ++i, ++u) {
    total += units_[u].multiply_accumulates(s);
    s = units_[u].output_shape(s);
  }
  for (int level = config_.levels - 1; level >= 0; --level) {
    s = {s.n, s.c + skips[level].c, s.h * 2, s.w * 2};
    for (int i = 0; i < 2; ++i, ++u) {
      total += units_[u].multiply_accumulates(s);
      s = units_[u].output_shape(s);
    }
  }
  total += units_[u].multiply_accumulates(s);
  return total;
}

}  // namespace postmimic::models
