#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "postmimic/image.hpp"

namespace postmimic::metrics {

/// Sliding-window SSIM configuration.
///
/// `weights` is a row-major window_extent x window_extent field summing to 1.
/// When the window is an outer product of a 1D profile with itself, `profile`
/// holds that profile and filtering runs separably; results agree with the
/// dense path to rounding.
struct SsimParams {
  int window_extent = 11;
  std::vector<double> weights;
  std::vector<double> profile;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  double c3() const { return c2() / 2.0; }

  /// Gaussian window, sigma 1.5 by default, normalized to unit sum.
  static SsimParams gaussian(double dynamic_range = 1.0, int extent = 11, double sigma = 1.5);
  static SsimParams uniform(double dynamic_range = 1.0, int extent = 11);
  /// Arbitrary (possibly non-separable) window.
  static SsimParams custom(std::vector<double> weights, int extent, double dynamic_range = 1.0);

  /// Throws ContractError on an even/small extent, negative weights, or a non-unit sum.
  void validate() const;
};

struct SsimWindowStats {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;
};

struct SsimResult {
  double mean_ssim = 0.0;
  double mean_l = 0.0;
  double mean_cs = 0.0;
  // Valid-placement maps: (H - extent + 1) x (W - extent + 1).
  std::optional<Image> ssim_map;
  std::optional<Image> l_map;
  std::optional<Image> cs_map;
};

struct SsimComponents {
  double l = 0.0;
  double cs = 0.0;
};

double mse(const Image& x, const Image& y);
double mae(const Image& x, const Image& y);

/// 20 log10(max / rmse). Identical images give +infinity rather than an error.
double psnr(const Image& x, const Image& y, double max_intensity = 1.0);
double psnr_from_mse(double mse_value, double max_intensity = 1.0);
inline bool is_infinite_psnr(double db) { return db == std::numeric_limits<double>::infinity(); }

/// Local weighted moments for every valid window placement, row-major.
std::vector<SsimWindowStats> window_stats(const Image& x, const Image& y, const SsimParams& params);

SsimResult ssim(const Image& x, const Image& y, const SsimParams& params, bool keep_maps = false);
SsimComponents ssim_components(const Image& x, const Image& y, const SsimParams& params);

/// d(1 - mean_ssim)/dx, exact for the valid-window definition above.
Image ssim_loss_gradient(const Image& x, const Image& y, const SsimParams& params);
/// d mse(x, y)/dx.
Image mse_loss_gradient(const Image& x, const Image& y);
/// d mae(x, y)/dx; zero where x == y.
Image mae_loss_gradient(const Image& x, const Image& y);

}  // namespace postmimic::metrics
