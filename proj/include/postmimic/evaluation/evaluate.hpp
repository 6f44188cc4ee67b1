#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/data/container.hpp"
#include "postmimic/models/network.hpp"

namespace postmimic::evaluation {

struct FrameRecord {
  std::string frame_id;
  double mse = 0.0;
  double mae = 0.0;
  double psnr = 0.0;  // +inf for an exact match
  double ssim = 0.0;
  double l = 0.0;
  double cs = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

/// Per-frame records plus mean +- std per metric.
///
/// Aggregates are accumulated in record order. PSNR aggregates cover the
/// finite values only; `psnr_infinite` counts exact matches.
struct MetricsReport {
  std::vector<FrameRecord> records;
  Aggregate mse, mae, psnr, ssim, l, cs;
  std::size_t psnr_infinite = 0;

  /// Recomputes every aggregate from `records`.
  void aggregate();
  /// One row per frame, 17 significant digits, "inf" for infinite PSNR.
  std::string csv() const;
  /// Aggregates, plus the table layout (mse in 1e-3, mae in 1e-2, psnr, ssim).
  nlohmann::json summary() const;
};

/// Sequential mean and population std in the given order.
Aggregate aggregate_values(const std::vector<double>& values);

/// Model output for one normalized frame: pad_to_multiple, forward, crop back, clamp to [0, 1].
Image run_frame(const models::Network& model, const Image& input);

/// Scores every frame of `loop_ids` against the corpus ground truth.
/// Throws LeakageError if any id is a training cineloop of `manifest`.
MetricsReport evaluate_testset(const models::Network& model, const data::Corpus& corpus,
                               const data::SplitManifest& manifest, const std::vector<std::string>& loop_ids);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

struct DensityEstimate {
  double bandwidth = 0.0;  // 0 when the sample has no spread
  std::vector<double> grid;
  std::vector<double> density;
};

struct ComponentSummary {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  Aggregate stats;
  Histogram histogram;
  DensityEstimate kde;
};

inline constexpr int kHistogramBins = 50;
inline constexpr int kDensityGrid = 128;

/// Uniform-bin histogram over [min, max]; collapses to one bin when min == max.
Histogram histogram(const std::vector<double>& values, int bins = kHistogramBins);
/// Gaussian KDE with Scott's bandwidth sigma * n^(-1/5).
DensityEstimate kernel_density(const std::vector<double>& values, int grid = kDensityGrid);

struct ComponentDistribution {
  ComponentSummary l;
  ComponentSummary cs;
};
ComponentDistribution component_distribution(const MetricsReport& report);
/// Bin table with columns component,bin,lo,hi,count.
std::string histogram_csv(const ComponentDistribution& d);
std::string density_csv(const ComponentDistribution& d);

/// The k lowest-SSIM records, ascending, ties broken by frame id.
std::vector<FrameRecord> worst_cases(const MetricsReport& report, std::size_t k);

/// |a - b| affinely rescaled onto [0, 1]; a constant difference maps to zeros.
Image difference_image(const Image& a, const Image& b);

struct BenchmarkResult {
  Extent extent;
  Extent padded;
  int repetitions = 0;
  double median_seconds = 0.0;
  double fps = 0.0;
  std::int64_t parameter_count = 0;
  std::int64_t multiply_accumulates = 0;
  std::int64_t flops = 0;
  nlohmann::json to_json() const;
};
inline constexpr int kBenchmarkWarmups = 3;
/// Median wall-clock over `repetitions` (>= 10) timed passes after warm-ups.
BenchmarkResult benchmark_inference(const models::Network& model, Extent extent, int repetitions);

/// 8-bit binary portable graymap; values are clamped to [0, 1].
void write_pgm(const std::filesystem::path& path, const Image& image);
/// Values scaled to [0, 1].
Image read_pgm(const std::filesystem::path& path);

}  // namespace postmimic::evaluation
