#include "wincascade/quantile_sketch.hpp"

#include "wincascade/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wincascade {

QuantileSketch::QuantileSketch(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("sketch epsilon must lie in (0, 0.5)");
}

std::int64_t QuantileSketch::band() const {
  return static_cast<std::int64_t>(std::floor(2.0 * epsilon_ * static_cast<double>(count_)));
}

void QuantileSketch::insert(double value) {
  if (std::isnan(value)) throw DataError("cannot insert NaN into a quantile sketch");
  const auto pos = std::upper_bound(tuples_.begin(), tuples_.end(), value,
                                    [](double v, const Tuple& t) { return v < t.value; });
  const bool extreme = pos == tuples_.begin() || pos == tuples_.end();
  const std::int64_t delta = extreme ? 0 : std::max<std::int64_t>(band() - 1, 0);
  tuples_.insert(pos, Tuple{value, 1, delta});
  ++count_;
  if (++since_compress_ >= static_cast<std::int64_t>(1.0 / (2.0 * epsilon_))) {
    compress();
    since_compress_ = 0;
  }
}

void QuantileSketch::compress() {
  if (tuples_.size() < 3) return;
  const std::int64_t limit = band();
  // Fold tuple i into i+1 while the merged uncertainty stays within the band.
  // The first and last tuples are kept so min and max stay exact.
  std::vector<Tuple> out;
  out.reserve(tuples_.size());
  out.push_back(tuples_.back());
  for (std::size_t i = tuples_.size() - 1; i-- > 1;) {
    Tuple& next = out.back();
    const Tuple& cur = tuples_[i];
    if (cur.g + next.g + next.delta <= limit) {
      next.g += cur.g;
    } else {
      out.push_back(cur);
    }
  }
  out.push_back(tuples_.front());
  std::reverse(out.begin(), out.end());
  tuples_ = std::move(out);
}

void QuantileSketch::merge(const QuantileSketch& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    const double eps = std::max(epsilon_, other.epsilon_);
    *this = other;
    epsilon_ = eps;
    return;
  }
  struct Bounds {
    double value;
    std::int64_t rmin;
    std::int64_t rmax;
  };
  auto bounds_of = [](const std::vector<Tuple>& ts) {
    std::vector<Bounds> out;
    std::int64_t rmin = 0;
    for (const auto& t : ts) {
      rmin += t.g;
      out.push_back({t.value, rmin, rmin + t.delta});
    }
    return out;
  };
  const auto a = bounds_of(tuples_);
  const auto b = bounds_of(other.tuples_);
  const std::int64_t n_b = other.count_;
  const std::int64_t n_a = count_;

  // For a tuple of one summary, its rank in the union is bracketed by the
  // bounds of its neighbours in the other summary. Ties: `a` sorts first.
  auto combine = [](const Bounds& t, const std::vector<Bounds>& other_side, std::int64_t n_other, bool other_first) {
    auto succ = other_first ? std::upper_bound(other_side.begin(), other_side.end(), t.value,
                                               [](double v, const Bounds& o) { return v < o.value; })
                            : std::lower_bound(other_side.begin(), other_side.end(), t.value,
                                               [](const Bounds& o, double v) { return o.value < v; });
    const std::int64_t below = succ == other_side.begin() ? 0 : std::prev(succ)->rmin;
    const std::int64_t above = succ == other_side.end() ? n_other : succ->rmax - 1;
    return Bounds{t.value, t.rmin + below, t.rmax + above};
  };

  std::vector<Bounds> merged;
  merged.reserve(a.size() + b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].value <= b[j].value)) {
      merged.push_back(combine(a[i++], b, n_b, false));
    } else {
      merged.push_back(combine(b[j++], a, n_a, true));
    }
  }
  std::vector<Tuple> tuples;
  tuples.reserve(merged.size());
  std::int64_t prev_rmin = 0;
  for (const auto& m : merged) {
    const std::int64_t rmin = std::max(m.rmin, prev_rmin);
    tuples.push_back({m.value, rmin - prev_rmin, std::max<std::int64_t>(m.rmax - rmin, 0)});
    prev_rmin = rmin;
  }
  tuples_ = std::move(tuples);
  count_ += other.count_;
  epsilon_ = std::max(epsilon_, other.epsilon_);
  compress();
}

double QuantileSketch::rank(double x) const {
  if (tuples_.empty() || x < tuples_.front().value) return 0.0;
  if (x >= tuples_.back().value) return static_cast<double>(count_);
  std::int64_t rmin = 0;
  std::size_t i = 0;
  while (i + 1 < tuples_.size() && tuples_[i + 1].value <= x) {
    rmin += tuples_[i].g;
    ++i;
  }
  rmin += tuples_[i].g;
  // True rank lies in [rmin(i), rmax(i+1) - 1].
  const auto& next = tuples_[i + 1];
  const std::int64_t upper = rmin + next.g + next.delta - 1;
  return 0.5 * static_cast<double>(rmin + upper);
}

double QuantileSketch::value_at_rank(std::int64_t r) const {
  if (tuples_.empty()) throw DataError("quantile query on an empty sketch");
  r = std::clamp<std::int64_t>(r, 1, count_);
  std::int64_t rmin = 0;
  double best_value = tuples_.front().value;
  std::int64_t best_error = std::numeric_limits<std::int64_t>::max();
  for (const auto& t : tuples_) {
    rmin += t.g;
    const std::int64_t rmax = rmin + t.delta;
    const std::int64_t error = std::max(r - rmin, rmax - r);
    if (error < best_error) {
      best_error = error;
      best_value = t.value;
    }
    if (rmin > r) break;
  }
  return best_value;
}

}  // namespace wincascade
