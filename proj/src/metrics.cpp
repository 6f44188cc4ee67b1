#include "postmimic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace postmimic::metrics {
namespace {

constexpr double kUnitSumTolerance = 1e-9;

void require_window_fits(const Image& x, const SsimParams& params, const char* op) {
  if (x.height() < params.window_extent || x.width() < params.window_extent) {
    throw ContractError(std::string(op) + ": image " + x.extent().str() + " is smaller than the " +
                        std::to_string(params.window_extent) + "x" + std::to_string(params.window_extent) +
                        " window; minimum size is " + std::to_string(params.window_extent) + "x" +
                        std::to_string(params.window_extent));
  }
}

// Weighted sum over every valid window placement.
Image filter_valid(const Image& img, const SsimParams& p) {
  const int k = p.window_extent;
  const int oh = img.height() - k + 1;
  const int ow = img.width() - k + 1;
  Image out(oh, ow);
  if (!p.profile.empty()) {
    Image rows(img.height(), ow);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += p.profile[j] * img.at(y, x + j);
        rows.at(y, x) = acc;
      }
    }
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += p.profile[i] * rows.at(y + i, x);
        out.at(y, x) = acc;
      }
    }
    return out;
  }
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) acc += p.weights[static_cast<std::size_t>(i) * k + j] * img.at(y + i, x + j);
      out.at(y, x) = acc;
    }
  }
  return out;
}

// Adjoint of filter_valid: scatters a window-map back onto the image grid.
Image filter_adjoint(const Image& map, const SsimParams& p, Extent image_extent) {
  const int k = p.window_extent;
  Image out(image_extent.height, image_extent.width);
  if (!p.profile.empty()) {
    Image rows(image_extent.height, map.width());
    for (int y = 0; y < map.height(); ++y)
      for (int x = 0; x < map.width(); ++x)
        for (int i = 0; i < k; ++i) rows.at(y + i, x) += p.profile[i] * map.at(y, x);
    for (int y = 0; y < image_extent.height; ++y)
      for (int x = 0; x < map.width(); ++x)
        for (int j = 0; j < k; ++j) out.at(y, x + j) += p.profile[j] * rows.at(y, x);
    return out;
  }
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) out.at(y + i, x + j) += p.weights[static_cast<std::size_t>(i) * k + j] * map.at(y, x);
  return out;
}

Image pointwise_product(const Image& a, const Image& b) {
  Image out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

struct RawMoments {
  Image mu_x, mu_y, ex2, ey2, exy;
};

RawMoments raw_moments(const Image& x, const Image& y, const SsimParams& p) {
  return {filter_valid(x, p), filter_valid(y, p), filter_valid(pointwise_product(x, x), p),
          filter_valid(pointwise_product(y, y), p), filter_valid(pointwise_product(x, y), p)};
}

SsimWindowStats stats_at(const RawMoments& m, std::size_t i) {
  SsimWindowStats s;
  s.mu_x = m.mu_x[i];
  s.mu_y = m.mu_y[i];
  s.var_x = std::max(0.0, m.ex2[i] - s.mu_x * s.mu_x);
  s.var_y = std::max(0.0, m.ey2[i] - s.mu_y * s.mu_y);
  s.cov_xy = m.exy[i] - s.mu_x * s.mu_y;
  return s;
}

}  // namespace

SsimParams SsimParams::gaussian(double dynamic_range, int extent, double sigma) {
  SsimParams p;
  p.window_extent = extent;
  p.dynamic_range = dynamic_range;
  p.profile.resize(extent);
  const double center = (extent - 1) / 2.0;
  for (int i = 0; i < extent; ++i) p.profile[i] = std::exp(-((i - center) * (i - center)) / (2.0 * sigma * sigma));
  const double total = std::accumulate(p.profile.begin(), p.profile.end(), 0.0);
  for (double& v : p.profile) v /= total;
  p.weights.resize(static_cast<std::size_t>(extent) * extent);
  for (int i = 0; i < extent; ++i)
    for (int j = 0; j < extent; ++j) p.weights[static_cast<std::size_t>(i) * extent + j] = p.profile[i] * p.profile[j];
  p.validate();
  return p;
}

SsimParams SsimParams::uniform(double dynamic_range, int extent) {
  SsimParams p;
  p.window_extent = extent;
  p.dynamic_range = dynamic_range;
  p.profile.assign(extent, 1.0 / extent);
  p.weights.assign(static_cast<std::size_t>(extent) * extent, 1.0 / (static_cast<double>(extent) * extent));
  p.validate();
  return p;
}

SsimParams SsimParams::custom(std::vector<double> weights, int extent, double dynamic_range) {
  SsimParams p;
  p.window_extent = extent;
  p.dynamic_range = dynamic_range;
  p.weights = std::move(weights);
  p.validate();
  return p;
}

void SsimParams::validate() const {
  if (window_extent < 3 || window_extent % 2 == 0) {
    throw ContractError("SsimParams: window extent must be odd and >= 3, got " + std::to_string(window_extent));
  }
  if (weights.size() != static_cast<std::size_t>(window_extent) * window_extent) {
    throw ContractError("SsimParams: expected " + std::to_string(window_extent * window_extent) + " weights, got " +
                        std::to_string(weights.size()));
  }
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0 || !std::isfinite(w); })) {
    throw ContractError("SsimParams: weights must be finite and non-negative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > kUnitSumTolerance) {
    throw ContractError("SsimParams: weights sum to " + std::to_string(total) + ", expected 1");
  }
  if (!profile.empty() && profile.size() != static_cast<std::size_t>(window_extent)) {
    throw ContractError("SsimParams: separable profile length does not match window extent");
  }
  if (!(dynamic_range > 0.0)) throw ContractError("SsimParams: dynamic range must be positive");
}

double mse(const Image& x, const Image& y) {
  require_same_extent(x, y, "mse");
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double mae(const Image& x, const Image& y) {
  require_same_extent(x, y, "mae");
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

double psnr_from_mse(double mse_value, double max_intensity) {
  if (!(max_intensity > 0.0)) throw ContractError("psnr: max_intensity must be positive");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(max_intensity / std::sqrt(mse_value));
}

double psnr(const Image& x, const Image& y, double max_intensity) { return psnr_from_mse(mse(x, y), max_intensity); }

std::vector<SsimWindowStats> window_stats(const Image& x, const Image& y, const SsimParams& params) {
  require_same_extent(x, y, "window_stats");
  require_window_fits(x, params, "window_stats");
  const RawMoments m = raw_moments(x, y, params);
  std::vector<SsimWindowStats> out(m.mu_x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stats_at(m, i);
  return out;
}

SsimResult ssim(const Image& x, const Image& y, const SsimParams& params, bool keep_maps) {
  require_same_extent(x, y, "ssim");
  require_window_fits(x, params, "ssim");
  const double c1 = params.c1();
  const double c2 = params.c2();
  const double c3 = params.c3();
  const RawMoments m = raw_moments(x, y, params);
  const int mh = m.mu_x.height();
  const int mw = m.mu_x.width();
  Image ssim_map(mh, mw), l_map(mh, mw), cs_map(mh, mw);
  double sum_ssim = 0.0, sum_l = 0.0, sum_cs = 0.0;
  for (std::size_t i = 0; i < ssim_map.size(); ++i) {
    const SsimWindowStats s = stats_at(m, i);
    const double sx = std::sqrt(s.var_x);
    const double sy = std::sqrt(s.var_y);
    const double l = (2.0 * s.mu_x * s.mu_y + c1) / (s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1);
    const double c = (2.0 * sx * sy + c2) / (s.var_x + s.var_y + c2);
    const double st = (s.cov_xy + c3) / (sx * sy + c3);
    const double cs = (2.0 * s.cov_xy + c2) / (s.var_x + s.var_y + c2);
    ssim_map[i] = l * c * st;
    l_map[i] = l;
    cs_map[i] = cs;
    sum_ssim += ssim_map[i];
    sum_l += l;
    sum_cs += cs;
  }
  const double n = static_cast<double>(ssim_map.size());
  SsimResult r;
  r.mean_ssim = sum_ssim / n;
  r.mean_l = sum_l / n;
  r.mean_cs = sum_cs / n;
  if (keep_maps) {
    r.ssim_map = std::move(ssim_map);
    r.l_map = std::move(l_map);
    r.cs_map = std::move(cs_map);
  }
  return r;
}

SsimComponents ssim_components(const Image& x, const Image& y, const SsimParams& params) {
  const SsimResult r = ssim(x, y, params);
  return {r.mean_l, r.mean_cs};
}

Image ssim_loss_gradient(const Image& x, const Image& y, const SsimParams& params) {
  require_same_extent(x, y, "ssim_loss_gradient");
  require_window_fits(x, params, "ssim_loss_gradient");
  const double c1 = params.c1();
  const double c2 = params.c2();
  const RawMoments m = raw_moments(x, y, params);
  const int mh = m.mu_x.height();
  const int mw = m.mu_x.width();
  const double scale = -1.0 / (static_cast<double>(mh) * mw);

  // Per-window sensitivities of S = l * cs with respect to the raw moments
  // E[x], E[x^2], E[xy]; the loss is 1 - mean(S).
  Image g_mean(mh, mw), g_sq(mh, mw), g_cross(mh, mw);
  for (std::size_t i = 0; i < g_mean.size(); ++i) {
    const double mx = m.mu_x[i];
    const double my = m.mu_y[i];
    const double raw_vx = m.ex2[i] - mx * mx;
    const double vx = std::max(0.0, raw_vx);
    const double vy = std::max(0.0, m.ey2[i] - my * my);
    const double cov = m.exy[i] - mx * my;
    const double a1 = 2.0 * mx * my + c1;
    const double b1 = mx * mx + my * my + c1;
    const double a2 = 2.0 * cov + c2;
    const double b2 = vx + vy + c2;
    const double s = (a1 * a2) / (b1 * b2);
    const double d_mean_direct = s * (2.0 * my / a1 - 2.0 * mx / b1);
    const double d_var = raw_vx > 0.0 ? -s / b2 : 0.0;
    const double d_cov = 2.0 * s / a2;
    g_mean[i] = scale * (d_mean_direct - 2.0 * mx * d_var - my * d_cov);
    g_sq[i] = scale * d_var;
    g_cross[i] = scale * d_cov;
  }
  const Image back_mean = filter_adjoint(g_mean, params, x.extent());
  const Image back_sq = filter_adjoint(g_sq, params, x.extent());
  const Image back_cross = filter_adjoint(g_cross, params, x.extent());
  Image grad(x.height(), x.width());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = back_mean[i] + 2.0 * x[i] * back_sq[i] + y[i] * back_cross[i];
  return grad;
}

Image mse_loss_gradient(const Image& x, const Image& y) {
  require_same_extent(x, y, "mse_loss_gradient");
  Image g(x.height(), x.width());
  const double scale = 2.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (x[i] - y[i]);
  return g;
}

Image mae_loss_gradient(const Image& x, const Image& y) {
  require_same_extent(x, y, "mae_loss_gradient");
  Image g(x.height(), x.width());
  const double scale = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = x[i] - y[i];
    g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
  }
  return g;
}

}  // namespace postmimic::metrics
