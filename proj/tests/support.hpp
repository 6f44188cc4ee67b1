#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "postmimic/image.hpp"
#include "postmimic/nn/tensor.hpp"
#include "postmimic/random.hpp"

namespace testing_support {

using postmimic::Image;
using postmimic::Rng;
using postmimic::nn::Shape;
using postmimic::nn::Tensor64;

inline Image random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng({seed, 0x1e57ULL});
  Image img(h, w);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

inline Tensor64 random_tensor(const Shape& s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng({seed, 0x7e50ULL});
  Tensor64 t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Distinct values spaced by at least `gap`, shuffled: keeps max/relu decisions
/// stable under finite-difference perturbations.
inline Tensor64 separated_tensor(const Shape& s, std::uint64_t seed, double gap = 0.01) {
  Rng rng({seed, 0x5e9aULL});
  Tensor64 t(s);
  std::vector<double> v(t.size());
  const double offset = -0.5 * gap * static_cast<double>(v.size()) + 0.5 * gap;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = offset + gap * static_cast<double>(i);
  rng.shuffle(v);
  t.data() = v;
  return t;
}

/// Normwise relative error: max |a - n| / max(|a|, |n|) over all entries.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0.0 ? diff : diff / scale;
}

/// Central differences of a scalar function with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(std::vector<double>& x, const std::function<double()>& f,
                                            double step = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// sum(weights * t): turns a tensor-valued op into a scalar for gradient checks.
inline double weighted_sum(const Tensor64& t, const Tensor64& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * weights[i];
  return s;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("postmimic_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
