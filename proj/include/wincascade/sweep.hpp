#pragma once

#include "wincascade/calibrate.hpp"
#include "wincascade/cascade.hpp"

#include <span>
#include <vector>

namespace wincascade {

/// One trace per half-width: the rule at `exit` (0-based) is replaced by the
/// calibrator's window of that width, the other exits keep `base`'s rules.
std::vector<CascadeTrace> sweep_policy(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                                       const CascadePolicy& base, const WindowCalibrator& calibrator,
                                       std::span<const double> half_widths, Index exit = 0);
std::vector<CascadeTrace> sweep_policy(const ScoreTable& table, const CascadePolicy& base,
                                       const WindowCalibrator& calibrator, std::span<const double> half_widths,
                                       Index exit = 0);

/// Single-threshold counterpart: one trace per validation pass percentage.
std::vector<CascadeTrace> sweep_single_threshold(std::span<const PrefixOutput> prefixes,
                                                 const Eigen::VectorXd& stage_cost, const CascadePolicy& base,
                                                 const WindowCalibrator& calibrator,
                                                 std::span<const double> pass_percents, Index exit = 0);

}  // namespace wincascade
