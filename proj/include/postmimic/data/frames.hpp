#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/image.hpp"
#include "postmimic/random.hpp"

namespace postmimic::data {

enum class DomainKind { kDecibels, kNormalized };

struct ValueDomain {
  DomainKind kind = DomainKind::kNormalized;
  double lo = 0.0;
  double hi = 1.0;

  static ValueDomain decibels(double lo = -120.0, double hi = 0.0) { return {DomainKind::kDecibels, lo, hi}; }
  static ValueDomain normalized() { return {DomainKind::kNormalized, 0.0, 1.0}; }
  bool contains(double v) const { return v >= lo && v <= hi; }

  nlohmann::json to_json() const;
  static ValueDomain from_json(const nlohmann::json& j);
  friend bool operator==(const ValueDomain&, const ValueDomain&) = default;
};

struct Frame {
  Image values;
  ValueDomain domain;
  Extent original_extent;

  Frame() = default;
  Frame(Image v, ValueDomain d) : values(std::move(v)), domain(d), original_extent(values.extent()) {}
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Cineloop {
  std::string id;
  std::vector<Frame> frames;
  std::string scanner = "synthetic";
  std::string target = "synthetic";
  std::uint64_t seed = 0;

  /// Throws ContractError: no frames, mixed extents/domains, or values outside the domain.
  void validate() const;
  friend bool operator==(const Cineloop&, const Cineloop&) = default;
};

std::string frame_id(const std::string& loop_id, std::size_t index);

/// Affine map of a frame's domain [lo, hi] onto [0, 1].
Image to_unit_range(const Frame& frame);

/// Mirror index into [0, n), excluding the edge sample, for any offset.
int mirror_index(int i, int n);

struct CropWindow {
  Extent source;
  Extent target;
  int offset_y = 0;  // in the mirror-extended source, relative to source origin
  int offset_x = 0;
  /// Source pixel feeding output (y, x).
  std::pair<int, int> source_of(int y, int x) const {
    return {mirror_index(offset_y + y, source.height), mirror_index(offset_x + x, source.width)};
  }
};

/// Plans a crop of `target` from `source`. A dimension smaller than the target
/// is reflection-padded symmetrically (offset fixed at -pad_before); a larger
/// one gets a uniform offset over all valid positions.
CropWindow plan_random_crop(Extent source, Extent target, Rng& rng);
Image apply_crop(const Image& image, const CropWindow& window);
Frame random_crop(const Frame& frame, Extent target, std::uint64_t seed);

struct CropBack {
  int top = 0;
  int left = 0;
  Extent original;
};

struct PaddedImage {
  Image image;
  CropBack crop_back;
};

/// Reflection-pads up to the next multiples of `divisor` (split evenly, extra
/// row/column after).
PaddedImage pad_to_multiple(const Image& image, int divisor = 16);
Image crop_back(const Image& padded, const CropBack& record);

// ---------------------------------------------------------------------------
// Splitting

/// Cineloop-level train/test split plus optional unpaired grouping of train.
struct SplitManifest {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> raw_only_ids;
  std::vector<std::string> processed_only_ids;

  /// Throws ContractError on overlaps or groups that do not cover the train set.
  void validate() const;
  bool has_unpaired_groups() const { return !raw_only_ids.empty() || !processed_only_ids.empty(); }
  bool is_train(const std::string& id) const;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
};

/// Test count is round(fraction * n) clamped to [1, n - 1].
SplitManifest split_by_cineloop(std::span<const std::string> loop_ids, double test_fraction, std::uint64_t seed);

/// Disjoint halves of the train set (the raw group gets the extra loop).
std::pair<std::vector<std::string>, std::vector<std::string>> make_unpaired_groups(
    std::span<const std::string> train_ids, std::uint64_t seed);

/// Frame totals per side given frame counts per loop id.
std::pair<std::size_t, std::size_t> frame_counts(const SplitManifest& manifest,
                                                 const std::map<std::string, std::size_t>& frames_per_loop);

}  // namespace postmimic::data
