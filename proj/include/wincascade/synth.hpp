#pragma once

#include "wincascade/score_table.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace wincascade {

/// Parameters of the synthetic score-table generator.
///
/// ID sample n draws y ~ U{0..K-1}, difficulty d ~ U(0,1), shared noise
/// g ~ N(0, I_K) and per-stage noise h_m ~ N(0, I_K); stage m logits are
///   v_m = a_m (1 - d) onehot(y) + sigma (rho g + sqrt(1 - rho^2) h_m).
/// OOD samples drop the class term, scale the noise by ood_noise_scale and
/// add ood_shift to every coordinate.
struct SynthSpec {
  Index n_classes = 10;
  Index n_id = 20000;
  Index n_ood = 10000;
  std::vector<double> signal{10.0, 10.5};  ///< a_1 < ... < a_M
  double noise_sigma = 2.0;
  double stage_correlation = 0.97;  ///< rho
  double ood_shift = 1.0;           ///< 0.5 sigma
  double ood_noise_scale = 1.0;
  std::vector<double> stage_cost{1.0, 1.0};
  std::uint64_t seed = 1;

  Index n_stages() const { return static_cast<Index>(signal.size()); }
};

void validate(const SynthSpec& spec);

/// ID samples come first, then OOD samples. Sample n uses RNG stream n.
ScoreTable generate(const SynthSpec& spec);

/// Disjoint, domain-stratified split into (validation, test). Each part
/// keeps the original row order.
std::pair<ScoreTable, ScoreTable> split(const ScoreTable& table, double validation_fraction, double test_fraction,
                                        std::uint64_t seed);

}  // namespace wincascade
