#include "postmimic/training/losses.hpp"

#include <cmath>

#include "postmimic/errors.hpp"

namespace postmimic::training {
namespace {

double log_sigmoid(double s) { return s >= 0.0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s)); }
double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(max(sigma(s), floor)); `clamped` tells whether the floor was hit.
double floored_log_sigmoid(double s, bool& clamped) {
  const double v = log_sigmoid(s);
  static const double floor_log = std::log(kLogFloor);
  clamped = v < floor_log;
  return clamped ? floor_log : v;
}

void require_nonempty(std::size_t n, const char* op) {
  if (n == 0) throw ContractError(std::string(op) + ": empty score map");
}

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

std::string to_string(Distance f) {
  switch (f) {
    case Distance::kMse: return "mse";
    case Distance::kMae: return "mae";
    case Distance::kSsim: return "ssim";
  }
  return "?";
}

Distance distance_from_string(const std::string& s) {
  if (s == "mse") return Distance::kMse;
  if (s == "mae") return Distance::kMae;
  if (s == "ssim") return Distance::kSsim;
  throw ContractError("unknown distance '" + s + "' (expected mse, mae or ssim)");
}

std::string loss_column(Distance f) { return f == Distance::kSsim ? "1-ssim" : to_string(f); }

std::string to_string(AdversarialKind k) { return k == AdversarialKind::kLeastSquares ? "least_squares" : "logistic"; }

AdversarialKind adversarial_from_string(const std::string& s) {
  if (s == "least_squares") return AdversarialKind::kLeastSquares;
  if (s == "logistic") return AdversarialKind::kLogistic;
  throw ContractError("unknown adversarial kind '" + s + "' (expected least_squares or logistic)");
}

const metrics::SsimParams& training_ssim_params() {
  static const metrics::SsimParams params = metrics::SsimParams::gaussian(1.0);
  return params;
}

double cycle_loss(const Image& original, const Image& reconstructed, Distance f) {
  require_same_extent(original, reconstructed, "cycle_loss");
  switch (f) {
    case Distance::kMse: return metrics::mse(reconstructed, original);
    case Distance::kMae: return metrics::mae(reconstructed, original);
    case Distance::kSsim: return 1.0 - metrics::ssim(reconstructed, original, training_ssim_params()).mean_ssim;
  }
  return 0.0;
}

double lsgan_discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  require_nonempty(real_scores.size(), "lsgan_discriminator_loss");
  require_nonempty(fake_scores.size(), "lsgan_discriminator_loss");
  double r = 0.0, f = 0.0;
  for (const double s : real_scores) r += (s - 1.0) * (s - 1.0);
  for (const double s : fake_scores) f += s * s;
  return 0.5 * r / static_cast<double>(real_scores.size()) + 0.5 * f / static_cast<double>(fake_scores.size());
}

double lsgan_generator_loss(std::span<const double> fake_scores) {
  require_nonempty(fake_scores.size(), "lsgan_generator_loss");
  double f = 0.0;
  for (const double s : fake_scores) f += (s - 1.0) * (s - 1.0);
  return f / static_cast<double>(fake_scores.size());
}

LogisticLoss logistic_discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  require_nonempty(real_scores.size(), "logistic_discriminator_loss");
  require_nonempty(fake_scores.size(), "logistic_discriminator_loss");
  LogisticLoss out;
  double r = 0.0, f = 0.0;
  bool c = false;
  for (const double s : real_scores) {
    r -= floored_log_sigmoid(s, c);
    out.clamped += c;
  }
  for (const double s : fake_scores) {
    f -= floored_log_sigmoid(-s, c);
    out.clamped += c;
  }
  out.value = r / static_cast<double>(real_scores.size()) + f / static_cast<double>(fake_scores.size());
  return out;
}

LogisticLoss logistic_generator_loss(std::span<const double> fake_scores) {
  require_nonempty(fake_scores.size(), "logistic_generator_loss");
  LogisticLoss out;
  double f = 0.0;
  bool c = false;
  for (const double s : fake_scores) {
    f -= floored_log_sigmoid(s, c);
    out.clamped += c;
  }
  out.value = f / static_cast<double>(fake_scores.size());
  return out;
}

TensorLoss distance_loss(const nn::Tensor& pred, const nn::Tensor& target, Distance f) {
  if (!(pred.shape() == target.shape())) {
    throw ContractError("distance_loss: shape mismatch " + pred.shape().str() + " vs " + target.shape().str());
  }
  const nn::Shape s = pred.shape();
  TensorLoss out{0.0, nn::Tensor(s)};
  const double planes = static_cast<double>(s.n) * s.c;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const Image x = nn::plane_to_image(pred, n, c);
      const Image y = nn::plane_to_image(target, n, c);
      Image g;
      switch (f) {
        case Distance::kMse:
          out.value += metrics::mse(x, y);
          g = metrics::mse_loss_gradient(x, y);
          break;
        case Distance::kMae:
          out.value += metrics::mae(x, y);
          g = metrics::mae_loss_gradient(x, y);
          break;
        case Distance::kSsim:
          out.value += 1.0 - metrics::ssim(x, y, training_ssim_params()).mean_ssim;
          g = metrics::ssim_loss_gradient(x, y, training_ssim_params());
          break;
      }
      auto dst = out.grad.plane(n, c);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(g[i] / planes);
    }
  }
  out.value /= planes;
  return out;
}

DiscriminatorLoss discriminator_loss(AdversarialKind kind, const nn::Tensor& real_scores, const nn::Tensor& fake_scores) {
  const std::vector<double> r(real_scores.data().begin(), real_scores.data().end());
  const std::vector<double> f(fake_scores.data().begin(), fake_scores.data().end());
  DiscriminatorLoss out{0.0, nn::Tensor(real_scores.shape()), nn::Tensor(fake_scores.shape()), 0};
  const double nr = static_cast<double>(r.size());
  const double nf = static_cast<double>(f.size());
  if (kind == AdversarialKind::kLeastSquares) {
    out.value = lsgan_discriminator_loss(as_span(r), as_span(f));
    for (std::size_t i = 0; i < r.size(); ++i) out.grad_real[i] = static_cast<float>((r[i] - 1.0) / nr);
    for (std::size_t i = 0; i < f.size(); ++i) out.grad_fake[i] = static_cast<float>(f[i] / nf);
    return out;
  }
  const LogisticLoss l = logistic_discriminator_loss(as_span(r), as_span(f));
  out.value = l.value;
  out.clamped = l.clamped;
  bool c = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    floored_log_sigmoid(r[i], c);
    out.grad_real[i] = c ? 0.0f : static_cast<float>(-(1.0 - sigmoid(r[i])) / nr);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    floored_log_sigmoid(-f[i], c);
    out.grad_fake[i] = c ? 0.0f : static_cast<float>(sigmoid(f[i]) / nf);
  }
  return out;
}

GeneratorLoss generator_loss(AdversarialKind kind, const nn::Tensor& fake_scores) {
  const std::vector<double> f(fake_scores.data().begin(), fake_scores.data().end());
  GeneratorLoss out{0.0, nn::Tensor(fake_scores.shape()), 0, true};
  const double nf = static_cast<double>(f.size());
  if (kind == AdversarialKind::kLeastSquares) {
    out.value = lsgan_generator_loss(as_span(f));
    for (std::size_t i = 0; i < f.size(); ++i) {
      out.grad_fake[i] = static_cast<float>(2.0 * (f[i] - 1.0) / nf);
      if (f[i] > 0.0) out.saturated = false;
    }
    return out;
  }
  const LogisticLoss l = logistic_generator_loss(as_span(f));
  out.value = l.value;
  out.clamped = l.clamped;
  bool c = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    floored_log_sigmoid(f[i], c);
    out.grad_fake[i] = c ? 0.0f : static_cast<float>(-(1.0 - sigmoid(f[i])) / nf);
    if (!c) out.saturated = false;
  }
  return out;
}

}  // namespace postmimic::training
