#include "postmimic/nn/adam.hpp"

#include <cmath>
#include <string>

#include "postmimic/errors.hpp"

namespace postmimic::nn {

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& config,
               std::string_view op) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ContractError("adam_step(" + std::string(op) + "): " + std::to_string(params.size()) + " params, " +
                        std::to_string(grads.size()) + " grads, " + std::to_string(state.first_moment.size()) +
                        " moments");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NonFiniteError("adam_step: non-finite gradient in " + std::string(op) + " at element " + std::to_string(i));
    }
  }
  state.step += 1;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const double step_size = config.learning_rate / correction1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = config.beta1 * state.first_moment[i] + (1.0 - config.beta1) * g;
    const double v = config.beta2 * state.second_moment[i] + (1.0 - config.beta2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    params[i] = static_cast<T>(params[i] - step_size * m / (std::sqrt(v / correction2) + config.epsilon));
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, const AdamConfig&,
                        std::string_view);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, const AdamConfig&,
                        std::string_view);

}  // namespace postmimic::nn
