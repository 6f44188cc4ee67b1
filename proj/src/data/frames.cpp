#include "postmimic/data/frames.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace postmimic::data {

nlohmann::json ValueDomain::to_json() const {
  return {{"kind", kind == DomainKind::kDecibels ? "decibels" : "normalized"}, {"lo", lo}, {"hi", hi}};
}

ValueDomain ValueDomain::from_json(const nlohmann::json& j) {
  ValueDomain d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "decibels") {
    d.kind = DomainKind::kDecibels;
  } else if (kind == "normalized") {
    d.kind = DomainKind::kNormalized;
  } else {
    throw DataError("unknown value domain '" + kind + "'");
  }
  d.lo = j.at("lo").get<double>();
  d.hi = j.at("hi").get<double>();
  if (!(d.lo < d.hi)) throw DataError("value domain requires lo < hi");
  return d;
}

void Cineloop::validate() const {
  if (frames.empty()) throw ContractError("cineloop " + id + ": no frames");
  const Extent e = frames.front().values.extent();
  const ValueDomain d = frames.front().domain;
  if (!(d.lo < d.hi)) throw ContractError("cineloop " + id + ": domain requires lo < hi");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.values.extent() != e || !(f.domain == d)) {
      throw ContractError("cineloop " + id + ": frame " + std::to_string(i) + " differs in extent or domain");
    }
    for (const double v : f.values.values()) {
      if (!d.contains(v)) {
        throw ContractError("cineloop " + id + ": frame " + std::to_string(i) + " has value " + std::to_string(v) +
                            " outside [" + std::to_string(d.lo) + ", " + std::to_string(d.hi) + "]");
      }
    }
  }
}

std::string frame_id(const std::string& loop_id, std::size_t index) { return loop_id + "#" + std::to_string(index); }

Image to_unit_range(const Frame& frame) {
  Image out = frame.values;
  if (frame.domain.kind == DomainKind::kNormalized && frame.domain.lo == 0.0 && frame.domain.hi == 1.0) return out;
  const double span = frame.domain.hi - frame.domain.lo;
  for (double& v : out.values()) v = (v - frame.domain.lo) / span;
  return out;
}

int mirror_index(int i, int n) {
  if (n <= 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

CropWindow plan_random_crop(Extent source, Extent target, Rng& rng) {
  if (source.height < 1 || source.width < 1 || target.height < 1 || target.width < 1) {
    throw ContractError("random_crop: empty extent");
  }
  const auto axis = [&rng](int src, int dst) -> int {
    if (src < dst) return -((dst - src) / 2);
    return static_cast<int>(rng.below(static_cast<std::uint64_t>(src - dst) + 1));
  };
  CropWindow w;
  w.source = source;
  w.target = target;
  w.offset_y = axis(source.height, target.height);
  w.offset_x = axis(source.width, target.width);
  return w;
}

Image apply_crop(const Image& image, const CropWindow& window) {
  if (image.extent() != window.source) throw ContractError("apply_crop: image does not match the planned source");
  Image out(window.target.height, window.target.width);
  for (int y = 0; y < window.target.height; ++y) {
    for (int x = 0; x < window.target.width; ++x) {
      const auto [sy, sx] = window.source_of(y, x);
      out.at(y, x) = image.at(sy, sx);
    }
  }
  return out;
}

Frame random_crop(const Frame& frame, Extent target, std::uint64_t seed) {
  Rng rng(seed);
  const CropWindow w = plan_random_crop(frame.values.extent(), target, rng);
  Frame out(apply_crop(frame.values, w), frame.domain);
  return out;
}

PaddedImage pad_to_multiple(const Image& image, int divisor) {
  if (divisor < 1) throw ContractError("pad_to_multiple: divisor must be >= 1");
  const int h = image.height();
  const int w = image.width();
  const int ph = (h + divisor - 1) / divisor * divisor;
  const int pw = (w + divisor - 1) / divisor * divisor;
  PaddedImage r;
  r.crop_back = {(ph - h) / 2, (pw - w) / 2, image.extent()};
  if (ph == h && pw == w) {
    r.image = image;
    return r;
  }
  r.image = Image(ph, pw);
  for (int y = 0; y < ph; ++y) {
    const int sy = mirror_index(y - r.crop_back.top, h);
    for (int x = 0; x < pw; ++x) r.image.at(y, x) = image.at(sy, mirror_index(x - r.crop_back.left, w));
  }
  return r;
}

Image crop_back(const Image& padded, const CropBack& record) {
  if (record.top + record.original.height > padded.height() || record.left + record.original.width > padded.width()) {
    throw ContractError("crop_back: record " + record.original.str() + " does not fit in " + padded.extent().str());
  }
  Image out(record.original.height, record.original.width);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(y, x) = padded.at(y + record.top, x + record.left);
  return out;
}

void SplitManifest::validate() const {
  const std::set<std::string> train(train_ids.begin(), train_ids.end());
  for (const auto& id : test_ids) {
    if (train.count(id)) throw ContractError("split manifest: loop " + id + " is in both train and test");
  }
  if (!has_unpaired_groups()) return;
  const std::set<std::string> raw(raw_only_ids.begin(), raw_only_ids.end());
  std::set<std::string> united = raw;
  for (const auto& id : processed_only_ids) {
    if (raw.count(id)) throw ContractError("split manifest: loop " + id + " is in both unpaired groups");
    united.insert(id);
  }
  if (united != train) throw ContractError("split manifest: unpaired groups do not cover the train set");
}

bool SplitManifest::is_train(const std::string& id) const {
  return std::find(train_ids.begin(), train_ids.end(), id) != train_ids.end();
}

nlohmann::json SplitManifest::to_json() const {
  return {{"train", train_ids}, {"test", test_ids}, {"raw_only", raw_only_ids}, {"processed_only", processed_only_ids}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.train_ids = j.at("train").get<std::vector<std::string>>();
  m.test_ids = j.at("test").get<std::vector<std::string>>();
  m.raw_only_ids = j.value("raw_only", std::vector<std::string>{});
  m.processed_only_ids = j.value("processed_only", std::vector<std::string>{});
  m.validate();
  return m;
}

SplitManifest split_by_cineloop(std::span<const std::string> loop_ids, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ContractError("split_by_cineloop: test fraction must lie in (0, 1), got " + std::to_string(test_fraction));
  }
  if (loop_ids.size() < 2) throw ContractError("split_by_cineloop: need at least 2 cineloops");
  if (std::set<std::string>(loop_ids.begin(), loop_ids.end()).size() != loop_ids.size()) {
    throw ContractError("split_by_cineloop: duplicate cineloop ids");
  }
  std::vector<std::string> ids(loop_ids.begin(), loop_ids.end());
  std::sort(ids.begin(), ids.end());
  Rng rng({seed, 0x5b117ULL});
  rng.shuffle(ids);
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  const auto n_test = std::clamp<std::ptrdiff_t>(std::llround(test_fraction * static_cast<double>(n)), 1, n - 1);
  SplitManifest m;
  m.test_ids.assign(ids.begin(), ids.begin() + n_test);
  m.train_ids.assign(ids.begin() + n_test, ids.end());
  std::sort(m.test_ids.begin(), m.test_ids.end());
  std::sort(m.train_ids.begin(), m.train_ids.end());
  return m;
}

std::pair<std::vector<std::string>, std::vector<std::string>> make_unpaired_groups(
    std::span<const std::string> train_ids, std::uint64_t seed) {
  if (train_ids.size() < 2) throw ContractError("make_unpaired_groups: need at least 2 training cineloops");
  std::vector<std::string> ids(train_ids.begin(), train_ids.end());
  std::sort(ids.begin(), ids.end());
  Rng rng({seed, 0x9a1dULL});
  rng.shuffle(ids);
  const std::size_t n_raw = (ids.size() + 1) / 2;
  std::vector<std::string> raw(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_raw));
  std::vector<std::string> processed(ids.begin() + static_cast<std::ptrdiff_t>(n_raw), ids.end());
  std::sort(raw.begin(), raw.end());
  std::sort(processed.begin(), processed.end());
  return {raw, processed};
}

std::pair<std::size_t, std::size_t> frame_counts(const SplitManifest& manifest,
                                                 const std::map<std::string, std::size_t>& frames_per_loop) {
  const auto total = [&](const std::vector<std::string>& ids) {
    std::size_t n = 0;
    for (const auto& id : ids) {
      const auto it = frames_per_loop.find(id);
      if (it == frames_per_loop.end()) throw ContractError("frame_counts: unknown loop " + id);
      n += it->second;
    }
    return n;
  };
  return {total(manifest.train_ids), total(manifest.test_ids)};
}

}  // namespace postmimic::data
