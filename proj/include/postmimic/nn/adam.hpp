#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace postmimic::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  std::int64_t step = 0;

  explicit AdamState(std::size_t count = 0) : first_moment(count, T{0}), second_moment(count, T{0}) {}
};

/// One bias-corrected Adam update. Throws ContractError on a size mismatch
/// and NonFiniteError (naming `op`) if any gradient is NaN or infinite; in
/// both cases neither params nor state are modified.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& config,
               std::string_view op = "parameters");

}  // namespace postmimic::nn
