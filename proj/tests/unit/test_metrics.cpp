#include <gtest/gtest.h>

#include <cmath>

#include "checks.hpp"
#include "postmimic/metrics.hpp"
#include "support.hpp"

using namespace postmimic;
using namespace postmimic::metrics;
using testing_support::random_image;

namespace {

const SsimParams& gauss() {
  static const SsimParams p = SsimParams::gaussian(1.0);
  return p;
}

}  // namespace

TEST(Mse, IdenticalImagesGiveZero) {
  const Image x = random_image(8, 8, 1);
  EXPECT_EQ(mse(x, x), 0.0);
}

TEST(Mse, ZeroVersusOneGivesOne) { EXPECT_EQ(mse(Image(4, 5, 0.0), Image(4, 5, 1.0)), 1.0); }

TEST(Mse, MatchesDoubleLoopOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(16, 16, s), y = random_image(16, 16, s + 100);
    EXPECT_NEAR(mse(x, y), pmchecks::oracle_mse(x, y), 1e-12);
  }
}

TEST(Mse, ShapeMismatchNamesBothShapes) {
  try {
    mse(Image(4, 4), Image(4, 5));
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("4x4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("4x5"), std::string::npos);
  }
}

TEST(Mae, IdenticalImagesGiveZero) {
  const Image x = random_image(8, 8, 2);
  EXPECT_EQ(mae(x, x), 0.0);
}

TEST(Mae, HandExample) { EXPECT_DOUBLE_EQ(mae(Image(1, 2, {0.0, 0.5}), Image(1, 2, {0.5, 1.0})), 0.5); }

TEST(Mae, MatchesDoubleLoopOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(16, 16, s), y = random_image(16, 16, s + 100);
    EXPECT_NEAR(mae(x, y), pmchecks::oracle_mae(x, y), 1e-12);
  }
  EXPECT_THROW(mae(Image(2, 2), Image(3, 2)), ContractError);
}

TEST(Psnr, KnownMseValues) {
  EXPECT_NEAR(psnr_from_mse(0.01, 1.0), 20.0, 1e-12);
  EXPECT_NEAR(psnr_from_mse(1e-4, 1.0), 40.0, 1e-12);
}

TEST(Psnr, ComposesWithMse) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(16, 16, s), y = random_image(16, 16, s + 7);
    EXPECT_NEAR(psnr(x, y, 1.0), 20.0 * std::log10(1.0 / std::sqrt(mse(x, y))), 1e-9);
  }
}

TEST(Psnr, IdenticalImagesAreInfiniteNotAnError) {
  const Image x = random_image(8, 8, 3);
  EXPECT_TRUE(is_infinite_psnr(psnr(x, x)));
}

TEST(Psnr, RejectsNonPositiveMax) { EXPECT_THROW(psnr_from_mse(0.1, 0.0), ContractError); }

TEST(Psnr, StrictlyDecreasingInMse) {
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 200; ++i) {
    const double v = psnr_from_mse(i * 1e-3);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SsimParams, GaussianWindowIsUnitSum) {
  const SsimParams& p = gauss();
  double sum = 0.0;
  for (double w : p.weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(p.window_extent, 11);
  EXPECT_DOUBLE_EQ(p.c1(), 1e-4);
  EXPECT_DOUBLE_EQ(p.c2(), 9e-4);
  EXPECT_DOUBLE_EQ(p.c3(), 4.5e-4);
}

TEST(SsimParams, RejectsInvalidWindows) {
  EXPECT_THROW(SsimParams::uniform(1.0, 4), ContractError);
  EXPECT_THROW(SsimParams::uniform(1.0, 1), ContractError);
  EXPECT_THROW(SsimParams::custom(std::vector<double>(9, 0.1), 3), ContractError);
  std::vector<double> negative(9, 1.0 / 7.0);
  negative[0] = -1.0 / 7.0;
  negative[1] = 3.0 / 7.0;
  EXPECT_THROW(SsimParams::custom(negative, 3), ContractError);
}

TEST(Ssim, IdenticalImagesGiveOne) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = random_image(20, 24, s);
    EXPECT_NEAR(ssim(x, x, gauss()).mean_ssim, 1.0, 1e-9);
  }
}

TEST(Ssim, ConstantPairEvaluatesAnalytically) {
  const Image x(16, 16, 0.5), y(16, 16, 0.25);
  const double expected = (2 * 0.125 + 1e-4) / (0.3125 + 1e-4);
  const SsimResult r = ssim(x, y, gauss());
  EXPECT_NEAR(r.mean_ssim, expected, 1e-12);
  EXPECT_NEAR(r.mean_l, expected, 1e-12);
  EXPECT_NEAR(r.mean_cs, 1.0, 1e-12);
  EXPECT_NEAR(expected, 0.8001, 1e-4);
}

TEST(Ssim, MatchesBruteForceWindowOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(32, 32, s), y = random_image(32, 32, s + 50);
    EXPECT_LE(pmchecks::metric_deviation(x, y, gauss()).max(), 1e-9) << "seed " << s;
  }
}

TEST(Ssim, UniformWindowMatchesOracle) {
  const SsimParams p = SsimParams::uniform(1.0, 7);
  const Image x = random_image(20, 18, 4), y = random_image(20, 18, 5);
  EXPECT_NEAR(ssim(x, y, p).mean_ssim, pmchecks::oracle_ssim(x, y, p).ssim, 1e-9);
}

TEST(Ssim, NonSeparableWindowMatchesOracle) {
  std::vector<double> w(25);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += (w[i] = 1.0 + static_cast<double>(i % 7));
  for (double& v : w) v /= total;
  const SsimParams p = SsimParams::custom(w, 5);
  const Image x = random_image(12, 14, 8), y = random_image(12, 14, 9);
  EXPECT_NEAR(ssim(x, y, p).mean_ssim, pmchecks::oracle_ssim(x, y, p).ssim, 1e-9);
}

TEST(Ssim, DynamicRangeScalesConstants) {
  const Image x = random_image(16, 16, 10, 0, 255), y = random_image(16, 16, 11, 0, 255);
  const SsimParams p = SsimParams::gaussian(255.0);
  EXPECT_NEAR(ssim(x, y, p).mean_ssim, pmchecks::oracle_ssim(x, y, p).ssim, 1e-9);
}

TEST(Ssim, TooSmallImageNamesMinimumSize) {
  try {
    ssim(Image(10, 12), Image(10, 12), gauss());
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("11x11"), std::string::npos);
  }
}

TEST(Ssim, IsSymmetric) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = random_image(24, 24, s), y = random_image(24, 24, s + 9);
    EXPECT_NEAR(ssim(x, y, gauss()).mean_ssim, ssim(y, x, gauss()).mean_ssim, 1e-12);
    EXPECT_NEAR(mse(x, y), mse(y, x), 1e-12);
    EXPECT_NEAR(mae(x, y), mae(y, x), 1e-12);
  }
}

TEST(Ssim, PerWindowValuesBoundedByOne) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(24, 24, s);
    Image y = x;
    for (std::size_t i = 0; i < y.size(); i += 3) y[i] = std::min(1.0, y[i] + 0.05);
    const SsimResult r = ssim(x, y, gauss(), true);
    for (double v : r.ssim_map->values()) EXPECT_LE(v, 1.0 + 1e-9);
  }
}

TEST(Ssim, MapsHaveValidPlacementExtent) {
  const SsimResult r = ssim(random_image(20, 30, 1), random_image(20, 30, 2), gauss(), true);
  EXPECT_EQ(r.ssim_map->extent(), (Extent{10, 20}));
  EXPECT_EQ(r.l_map->extent(), (Extent{10, 20}));
}

TEST(WindowStats, VariancesNonNegativeAndMatchMoments) {
  const Image x(12, 12, 0.3), y = random_image(12, 12, 6);
  for (const SsimWindowStats& s : window_stats(x, y, gauss())) {
    EXPECT_GE(s.var_x, -1e-9);
    EXPECT_GE(s.var_y, -1e-9);
    EXPECT_NEAR(s.mu_x, 0.3, 1e-12);
  }
}

TEST(SsimComponents, IdenticalImagesGiveUnitComponents) {
  const Image x = random_image(16, 16, 12);
  const SsimComponents c = ssim_components(x, x, gauss());
  EXPECT_NEAR(c.l, 1.0, 1e-12);
  EXPECT_NEAR(c.cs, 1.0, 1e-9);
}

TEST(SsimComponents, DecompositionIdentityHolds) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_image(20, 20, s), y = random_image(20, 20, s + 3);
    const SsimResult r = ssim(x, y, gauss(), true);
    double lcs = 0.0;
    for (std::size_t i = 0; i < r.l_map->size(); ++i) lcs += (*r.l_map)[i] * (*r.cs_map)[i];
    EXPECT_NEAR(lcs / static_cast<double>(r.l_map->size()), r.mean_ssim, 1e-9);
  }
}

TEST(SsimComponents, ConstantPair) {
  const SsimComponents c = ssim_components(Image(16, 16, 0.5), Image(16, 16, 0.25), gauss());
  EXPECT_NEAR(c.l, 0.8001, 1e-4);
  EXPECT_NEAR(c.cs, 1.0, 1e-12);
}

TEST(SsimGradient, MatchesFiniteDifferencesOnTwentySeeds) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(pmchecks::gradient_check("ssim_loss", s), 1e-3) << "seed " << s;
}

TEST(SsimGradient, AtOptimumMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(pmchecks::gradient_check("ssim_loss_at_optimum", s), 1e-3);
}

TEST(MseGradient, ZeroAtEquality) {
  const Image x = random_image(8, 8, 13);
  const Image g = mse_loss_gradient(x, x);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(MseGradient, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    EXPECT_LT(pmchecks::gradient_check("mse_loss", s), 1e-3);
    EXPECT_LT(pmchecks::gradient_check("mae_loss", s), 1e-3);
  }
}
