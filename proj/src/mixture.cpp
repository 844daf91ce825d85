#include "wincascade/error.hpp"
#include "wincascade/random.hpp"
#include "wincascade/score_table.hpp"

#include <cmath>
#include <numeric>

namespace wincascade {

namespace {

constexpr std::uint64_t kIdStream = 0x4d49585f4944ULL;    // "MIX_ID"
constexpr std::uint64_t kOodStream = 0x4d49585f4f4f44ULL; // "MIX_OOD"
constexpr std::uint64_t kMixStream = 0x4d49585f414c4cULL; // "MIX_ALL"

std::vector<Index> shuffled_range(Index n, std::uint64_t seed, std::uint64_t stream) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  PortableRng rng(seed, stream);
  rng.shuffle(std::span(idx));
  return idx;
}

/// Rows to draw from the non-binding pool: floor or ceil of `ideal`, whichever
/// puts the ID share closer to alpha (the larger count on a tie).
Index partner_count(double ideal, Index pool, Index fixed, bool fixed_is_id, double alpha) {
  auto gap = [&](Index other) {
    const double id = static_cast<double>(fixed_is_id ? fixed : other);
    const double total = static_cast<double>(fixed + other);
    return total == 0.0 ? 1.0 : std::abs(id / total - alpha);
  };
  const Index lo = std::min(pool, static_cast<Index>(std::floor(ideal)));
  const Index hi = std::min(pool, lo + 1);
  return gap(lo) < gap(hi) ? lo : hi;
}

}  // namespace

ScoreTable mix_subsample(const ScoreTable& id_table, const ScoreTable& ood_table, const MixtureSpec& spec) {
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw ConfigError("mixture alpha must lie in [0, 1]");
  if (id_table.n_classes() != ood_table.n_classes())
    throw DataError("mixture pools have different class counts (" + std::to_string(id_table.n_classes()) + " vs " +
                    std::to_string(ood_table.n_classes()) + ")");
  if (id_table.n_stages() != ood_table.n_stages())
    throw DataError("mixture pools have different stage counts (" + std::to_string(id_table.n_stages()) + " vs " +
                    std::to_string(ood_table.n_stages()) + ")");
  if (id_table.stage_cost() != ood_table.stage_cost()) throw DataError("mixture pools have different stage costs");

  const Index pool_id = id_table.n_samples();
  const Index pool_ood = ood_table.n_samples();
  const double a = spec.alpha;
  Index take_id = 0;
  Index take_ood = 0;
  if (a == 1.0) {
    take_id = pool_id;
  } else if (a == 0.0) {
    take_ood = pool_ood;
  } else if (static_cast<double>(pool_id) * (1.0 - a) <= static_cast<double>(pool_ood) * a) {
    // ID pool is the binding constraint.
    take_id = pool_id;
    take_ood = partner_count(static_cast<double>(pool_id) * (1.0 - a) / a, pool_ood, take_id, true, a);
  } else {
    take_ood = pool_ood;
    take_id = partner_count(static_cast<double>(pool_ood) * a / (1.0 - a), pool_id, take_ood, false, a);
  }
  if (take_id + take_ood == 0) throw DataError("mixture would be empty");

  auto id_rows = shuffled_range(pool_id, spec.seed, kIdStream);
  auto ood_rows = shuffled_range(pool_ood, spec.seed, kOodStream);
  id_rows.resize(static_cast<std::size_t>(take_id));
  ood_rows.resize(static_cast<std::size_t>(take_ood));
  std::sort(id_rows.begin(), id_rows.end());
  std::sort(ood_rows.begin(), ood_rows.end());

  // Concatenate the chosen rows, then shuffle the combined order.
  const auto perm = shuffled_range(take_id + take_ood, spec.seed, kMixStream);

  ScoreTable::Meta meta = id_table.meta();
  meta["mixture_alpha"] = std::to_string(a);
  meta["mixture_seed"] = std::to_string(spec.seed);
  if (take_id < pool_id || take_ood < pool_ood) {
    meta["mixture_note"] = "subsampled pools to " + std::to_string(take_id) + " ID of " + std::to_string(pool_id) +
                           " and " + std::to_string(take_ood) + " OOD of " + std::to_string(pool_ood);
  }
  if (take_ood == 0) return id_table.select(id_rows).select(perm).with_meta(meta);
  if (take_id == 0) return ood_table.select(ood_rows).select(perm).with_meta(meta);
  return concatenate(id_table.select(id_rows), ood_table.select(ood_rows)).select(perm).with_meta(meta);
}

}  // namespace wincascade
