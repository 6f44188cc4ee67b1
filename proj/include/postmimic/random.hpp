#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace postmimic {

/// Seeded generator with explicitly defined sampling formulas, so every
/// artifact derived from a seed is identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Independent stream keyed by several integers (seed, step, stream id, ...).
  Rng(std::initializer_list<std::uint64_t> keys);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; no cached second draw.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace postmimic
