#include "wincascade/synth.hpp"

#include "wincascade/error.hpp"
#include "wincascade/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wincascade {

void validate(const SynthSpec& spec) {
  if (spec.n_classes < 2) throw ConfigError("synth: need at least two classes");
  if (spec.n_id < 0 || spec.n_ood < 0 || spec.n_id + spec.n_ood < 1) throw ConfigError("synth: need samples");
  if (spec.signal.empty()) throw ConfigError("synth: need at least one stage");
  for (std::size_t m = 1; m < spec.signal.size(); ++m)
    if (!(spec.signal[m] > spec.signal[m - 1])) throw ConfigError("synth: signal strengths must strictly increase");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("synth: noise sigma must be >= 0");
  if (!(spec.stage_correlation >= 0.0 && spec.stage_correlation <= 1.0))
    throw ConfigError("synth: stage correlation must lie in [0, 1]");
  if (!(spec.ood_noise_scale >= 0.0) || !std::isfinite(spec.ood_shift)) throw ConfigError("synth: bad OOD parameters");
  if (spec.stage_cost.size() != spec.signal.size()) throw ConfigError("synth: one stage cost per stage is required");
}

ScoreTable generate(const SynthSpec& spec) {
  validate(spec);
  const Index n = spec.n_id + spec.n_ood;
  const Index k = spec.n_classes;
  const Index m_count = spec.n_stages();
  std::vector<LogitMatrix> logits(static_cast<std::size_t>(m_count), LogitMatrix(n, k));
  Eigen::VectorXi labels(n);
  std::vector<Domain> domain(static_cast<std::size_t>(n));
  const double rho = spec.stage_correlation;
  const double own = std::sqrt(1.0 - rho * rho);
  Eigen::VectorXd shared(k);
  Eigen::VectorXd v(k);

  for (Index i = 0; i < n; ++i) {
    PortableRng rng(spec.seed, static_cast<std::uint64_t>(i));
    const bool ood = i >= spec.n_id;
    int y = kOodLabel;
    double difficulty = 1.0;
    if (!ood) {
      y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      difficulty = rng.uniform();
    }
    for (Index c = 0; c < k; ++c) shared[c] = rng.normal();
    const double sigma = ood ? spec.noise_sigma * spec.ood_noise_scale : spec.noise_sigma;
    for (Index m = 0; m < m_count; ++m) {
      for (Index c = 0; c < k; ++c) v[c] = sigma * (rho * shared[c] + own * rng.normal());
      if (ood) {
        v.array() += spec.ood_shift;
      } else {
        v[y] += spec.signal[static_cast<std::size_t>(m)] * (1.0 - difficulty);
      }
      logits[static_cast<std::size_t>(m)].row(i) = v.cast<float>().transpose();
    }
    labels[i] = y;
    domain[static_cast<std::size_t>(i)] = ood ? Domain::OutOfDistribution : Domain::InDistribution;
  }
  Eigen::VectorXd costs = Eigen::Map<const Eigen::VectorXd>(spec.stage_cost.data(), m_count);
  return ScoreTable(std::move(logits), std::move(labels), std::move(domain), std::move(costs),
                    {{"source", "synth"}, {"seed", std::to_string(spec.seed)}});
}

std::pair<ScoreTable, ScoreTable> split(const ScoreTable& table, double validation_fraction, double test_fraction,
                                        std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && test_fraction > 0.0) ||
      std::abs(validation_fraction + test_fraction - 1.0) > 1e-9)
    throw ConfigError("split fractions must be positive and sum to 1");
  std::vector<Index> val_rows;
  std::vector<Index> test_rows;
  for (const Domain d : {Domain::InDistribution, Domain::OutOfDistribution}) {
    std::vector<Index> rows;
    for (Index i = 0; i < table.n_samples(); ++i)
      if (table.domain()[static_cast<std::size_t>(i)] == d) rows.push_back(i);
    PortableRng rng(seed, static_cast<std::uint64_t>(d) + 0x53504c4954ULL);  // "SPLIT"
    rng.shuffle(std::span(rows));
    const auto take = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(rows.size())));
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  if (val_rows.empty() || test_rows.empty()) throw ConfigError("split leaves one side empty (degenerate fraction)");
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {table.select(val_rows), table.select(test_rows)};
}

}  // namespace wincascade
