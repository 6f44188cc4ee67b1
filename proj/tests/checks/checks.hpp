#pragma once

// Independent oracles and property audits shared by the unit tests and the
// acceptance binary. Nothing here calls the code path it is checking.

#include <cstdint>
#include <string>
#include <vector>

#include "postmimic/image.hpp"
#include "postmimic/metrics.hpp"
#include "postmimic/nn/tensor.hpp"

namespace pmchecks {

using postmimic::Image;

// ---- metrics ---------------------------------------------------------------

double oracle_mse(const Image& x, const Image& y);
double oracle_mae(const Image& x, const Image& y);

struct OracleSsim {
  double ssim = 0.0;
  double l = 0.0;
  double cs = 0.0;
  double lcs = 0.0;  // mean over windows of l_w * cs_w
  double max_window_ssim = 0.0;
};
/// Materializes every valid window and evaluates l, c, s separately.
OracleSsim oracle_ssim(const Image& x, const Image& y, const postmimic::metrics::SsimParams& params);

struct MetricDeviation {
  double mse = 0.0, mae = 0.0, psnr = 0.0, ssim = 0.0, l = 0.0, cs = 0.0;
  double decomposition = 0.0;  // |mean(l*cs) - mean ssim| as reported by the library
  double max() const;
};
MetricDeviation metric_deviation(const Image& x, const Image& y, const postmimic::metrics::SsimParams& params);

// ---- gradients ---------------------------------------------------------------

const std::vector<std::string>& gradient_check_names();
/// Normwise relative error between analytic and central-difference gradients.
double gradient_check(const std::string& name, std::uint64_t seed);

// ---- training ----------------------------------------------------------------

struct LinearTaskResult {
  double w = 0.0, b = 0.0;        // trained 1x1 conv
  double w_ls = 0.0, b_ls = 0.0;  // normal-equation solution over all pixels
  std::int64_t steps = 0;
  double error() const;
};
/// Gray-box mse training of a 1x1 conv on y = w x + b data.
LinearTaskResult linear_task(std::uint64_t seed, std::int64_t steps);

// ---- data --------------------------------------------------------------------

struct LeakageAudit {
  int seeds = 0;
  std::size_t loop_overlaps = 0;    // ids in both train and test
  std::size_t group_overlaps = 0;   // ids in both unpaired groups
  std::size_t frame_overlaps = 0;   // frame ids drawn by both batch streams
  std::size_t test_frames_drawn = 0;
  std::size_t coverage_failures = 0;
  bool clean() const;
};
LeakageAudit leakage_fuzz(int seeds);

struct PadCropAudit {
  int extents = 0;
  int roundtrip_failures = 0;
  int shape_failures = 0;
  int resampling_failures = 0;
  bool clean() const { return roundtrip_failures == 0 && shape_failures == 0 && resampling_failures == 0; }
};
/// Random extents through pad_to_multiple(16) -> crop_back, plus generator forward shape checks.
PadCropAudit pad_crop_audit(int extents, std::uint64_t seed, bool run_generator);

// ---- evaluation --------------------------------------------------------------

struct ReaggregationCheck {
  std::size_t rows = 0;
  double max_abs_diff = 0.0;  // over every metric's mean and std
  bool exact = false;
};
/// Parses a per-frame CSV and compares its re-aggregation with a summary JSON.
ReaggregationCheck reaggregate(const std::string& csv, const std::string& summary_json);

}  // namespace pmchecks
