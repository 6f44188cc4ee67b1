#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/data/container.hpp"
#include "postmimic/data/frames.hpp"

namespace postmimic::data {

inline constexpr double kRawFloorDb = -120.0;
inline constexpr double kOracleClipDb = -80.0;
inline constexpr double kOracleGamma = 0.7;

struct Lesion {
  double center_y = 0.0;
  double center_x = 0.0;
  double radius = 0.0;
  double contrast_db = 0.0;  // within [-30, 30]
};

/// Synthetic speckle phantom description.
struct PhantomSpec {
  Extent extent{128, 128};
  std::vector<Lesion> lesions;
  /// Fraction of grid cells holding a scatterer; 1 gives fully developed speckle.
  double speckle_density = 1.0;
  /// Depth gain in dB per row (axial).
  double gain_slope_db_per_px = 0.0;
  std::uint64_t seed = 0;
  int frame_count = 8;
  /// Fraction of scatterers re-drawn between consecutive frames.
  double jitter_fraction = 0.05;
  /// Per-frame sub-pixel drift bound, pixels.
  double drift_px = 0.25;

  /// Throws ContractError listing every invalid field.
  void validate() const;
  nlohmann::json to_json() const;
  static PhantomSpec from_json(const nlohmann::json& j);
};

/// Point-spread-function widths (Gaussian sigma, pixels) used for speckle.
inline constexpr double kPsfAxialSigma = 1.5;
inline constexpr double kPsfLateralSigma = 1.0;

/// Envelope fields of every frame before log compression. With density 1,
/// zero gain and no lesions each pixel is Rayleigh with scale sqrt(1/2).
std::vector<Image> synth_envelopes(const PhantomSpec& spec);

/// Raw decibel cineloop in [-120, 0] dB; values are float32-representable.
Cineloop synth_cineloop(const PhantomSpec& spec, const std::string& id);

/// 20 log10(envelope / max), clamped at `floor_db`.
Frame log_compress(const Image& envelope, double floor_db = kRawFloorDb);

/// 3x3 median with edge replication.
Image median3x3(const Image& image);

/// Fixed stand-in for a scanner's post-processing: clip to [-80, 0] dB,
/// 3x3 median, gamma 0.7 on the unit-mapped clip range. Output in [0, 1].
Frame oracle_postprocess(const Frame& raw);

/// Recipe for a synthetic corpus: a phantom template plus per-loop random
/// lesions and depth gain.
struct CorpusRecipe {
  PhantomSpec phantom;
  int random_lesions = 2;
  double lesion_radius_min = 6.0;
  double lesion_radius_max = 16.0;
  double contrast_min_db = -30.0;
  double contrast_max_db = 30.0;
  double gain_slope_min = 0.0;
  double gain_slope_max = 0.0;
  /// Also store oracle outputs as paired processed companions.
  bool emit_processed = false;

  void validate() const;
  nlohmann::json to_json() const;
  static CorpusRecipe from_json(const nlohmann::json& j);
};

/// `count` loops with ids loop0000, loop0001, ...; loop i is seeded from (seed, i).
Corpus make_synthetic_corpus(const CorpusRecipe& recipe, int count, std::uint64_t seed);

}  // namespace postmimic::data
