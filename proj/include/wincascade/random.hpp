#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace wincascade {

/// Portable random stream.
///
/// std::mt19937_64 is seeded through std::seed_seq from (seed, stream), both
/// of which are fully specified by the standard. Uniform and normal variates
/// are derived here rather than through <random> distributions, whose output
/// is implementation-defined. Each sample index gets its own stream, so the
/// values drawn for one sample never depend on how many others were drawn.
class PortableRng {
 public:
  PortableRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; pairs are cached.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace wincascade
