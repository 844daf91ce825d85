#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wincascade {

/// Greenwald-Khanna summary of a stream of doubles.
///
/// Every rank query is answered within epsilon * count() of the true rank.
/// The summary is deterministic for a fixed insertion order and can be
/// merged with another summary (the bound then holds for the larger of the
/// two epsilons).
class QuantileSketch {
 public:
  explicit QuantileSketch(double epsilon = 0.005);

  void insert(double value);
  void merge(const QuantileSketch& other);

  std::int64_t count() const { return count_; }
  double epsilon() const { return epsilon_; }
  std::size_t summary_size() const { return tuples_.size(); }

  /// Estimated number of inserted values <= x.
  double rank(double x) const;
  /// Value whose rank is within epsilon * count() of r (1-based, clamped to [1, count()]).
  double value_at_rank(std::int64_t r) const;

 private:
  struct Tuple {
    double value;
    std::int64_t g;      // r_min(i) - r_min(i-1)
    std::int64_t delta;  // r_max(i) - r_min(i)
  };

  void compress();
  std::int64_t band() const;

  std::vector<Tuple> tuples_;
  std::int64_t count_ = 0;
  std::int64_t since_compress_ = 0;
  double epsilon_;
};

}  // namespace wincascade
