#include "postmimic/models/network.hpp"

#include <cstring>

namespace postmimic::models {

nn::Tensor Network::forward(const nn::Tensor& x, Phase phase, std::unique_ptr<Tape>* tape) {
  if (phase != Phase::kTrain) return run(x, phase, tape);
  std::unique_ptr<Tape> local;
  std::unique_ptr<Tape>& t = tape ? *tape : local;
  nn::Tensor out = run(x, phase, &t);
  apply_running_stats(*t);
  return out;
}

void Network::zero_grad() {
  for (Param* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

void Network::require_divisible(const nn::Shape& input) const {
  const int d = spatial_divisor();
  if (input.h % d != 0 || input.w % d != 0) {
    throw ContractError(kind() + ": input " + std::to_string(input.h) + "x" + std::to_string(input.w) +
                        " is not divisible by " + std::to_string(d) +
                        "; use pad_to_multiple before the forward pass and crop back afterwards");
  }
}

std::int64_t count_params(const Network& net) {
  std::int64_t total = 0;
  for (const Param* p : net.params()) {
    if (p->kind == ParamKind::kTrainable) total += static_cast<std::int64_t>(p->count());
  }
  return total;
}

ModelSummary estimate_flops(const Network& net, const nn::Shape& input) {
  ModelSummary s;
  s.parameter_count = count_params(net);
  s.multiply_accumulates = net.multiply_accumulates(input);
  s.flops = 2 * s.multiply_accumulates;
  return s;
}

std::vector<ManifestEntry> manifest(const Network& net) {
  std::vector<ManifestEntry> out;
  std::size_t offset = 0;
  for (const Param* p : net.params()) {
    out.push_back({p->name, p->kind, p->shape, offset, p->count()});
    offset += p->count() * sizeof(float);
  }
  return out;
}

std::uint64_t parameter_hash(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Param* p : net.params()) {
    for (const float v : p->value) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

std::string to_string(ParamKind kind) { return kind == ParamKind::kTrainable ? "param" : "buffer"; }

ParamKind param_kind_from_string(const std::string& s) {
  if (s == "param") return ParamKind::kTrainable;
  if (s == "buffer") return ParamKind::kBuffer;
  throw DataError("unknown parameter kind '" + s + "'");
}

}  // namespace postmimic::models
