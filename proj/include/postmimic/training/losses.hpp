#pragma once

#include <span>
#include <string>

#include "postmimic/image.hpp"
#include "postmimic/metrics.hpp"
#include "postmimic/nn/tensor.hpp"

namespace postmimic::training {

enum class Distance { kMse, kMae, kSsim };
enum class AdversarialKind { kLeastSquares, kLogistic };

std::string to_string(Distance f);
Distance distance_from_string(const std::string& s);
/// History column name of a distance loss: "mse", "mae" or "1-ssim".
std::string loss_column(Distance f);
std::string to_string(AdversarialKind k);
AdversarialKind adversarial_from_string(const std::string& s);

/// Floor applied to probabilities before taking logs.
inline constexpr double kLogFloor = 1e-7;

/// Unit-range SSIM window used inside training (Gaussian 11, sigma 1.5, L = 1).
const metrics::SsimParams& training_ssim_params();

/// f(original, reconstructed); for ssim this is 1 - mean_ssim.
double cycle_loss(const Image& original, const Image& reconstructed, Distance f);

double lsgan_discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores);
double lsgan_generator_loss(std::span<const double> fake_scores);

struct LogisticLoss {
  double value = 0.0;
  /// Number of log arguments that hit the floor.
  std::int64_t clamped = 0;
};
/// -mean[log sigma(real)] - mean[log(1 - sigma(fake))].
LogisticLoss logistic_discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores);
/// Non-saturating generator objective -mean[log sigma(fake)].
LogisticLoss logistic_generator_loss(std::span<const double> fake_scores);

/// Loss value and gradient with respect to the prediction (batch tensors).
struct TensorLoss {
  double value = 0.0;
  nn::Tensor grad;
};
/// Mean over the batch of f(pred_i, target_i); shapes must match.
TensorLoss distance_loss(const nn::Tensor& pred, const nn::Tensor& target, Distance f);

struct DiscriminatorLoss {
  double value = 0.0;
  nn::Tensor grad_real;
  nn::Tensor grad_fake;
  std::int64_t clamped = 0;
};
DiscriminatorLoss discriminator_loss(AdversarialKind kind, const nn::Tensor& real_scores, const nn::Tensor& fake_scores);

struct GeneratorLoss {
  double value = 0.0;
  nn::Tensor grad_fake;
  std::int64_t clamped = 0;
  /// Every score sits where the loss cannot improve: all scores <= 0 for
  /// least squares, all probabilities at the log floor for logistic.
  bool saturated = false;
};
GeneratorLoss generator_loss(AdversarialKind kind, const nn::Tensor& fake_scores);

}  // namespace postmimic::training
