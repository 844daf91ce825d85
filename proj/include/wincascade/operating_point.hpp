#pragma once

#include "wincascade/outcome.hpp"
#include "wincascade/uncertainty.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wincascade {

enum class Criterion {
  RiskAtMost,       ///< largest coverage whose selective risk is <= r%
  CoverageExactly,  ///< accept c% of samples
  TprExactly,       ///< accept p% of ID samples (OOD detection)
};

/// Which samples a coverage percentage is measured over.
enum class CoverageBase { IdOnly, AllSamples };

struct OperatingPoint {
  Task task = Task::SelectiveClassification;
  Criterion criterion = Criterion::RiskAtMost;
  double percent = 5.0;
  CoverageBase coverage_base = CoverageBase::IdOnly;
  std::optional<double> tau;  ///< set once resolved
};

/// Throws ConfigError when the criterion does not fit the task or the
/// percentage is outside (0, 100).
void validate(const OperatingPoint& point);

/// Parses `cov@R`, `risk@C` or `fpr@P`.
OperatingPoint parse_point(Task task, const std::string& text, CoverageBase base = CoverageBase::IdOnly);
/// Inverse of parse_point, e.g. "cov@5".
std::string point_name(const OperatingPoint& point);

std::string to_string(CoverageBase base);

/// Nearest-rank percentile of sorted values: the value at rank ceil(q/100 * N), q in [0, 100].
double nearest_rank(std::span<const double> sorted, double q_percent);

/// Uncertainties of the samples a coverage percentage is counted over.
std::vector<double> coverage_population(const EvalOutcome& outcome, Task task, CoverageBase base);

/// Threshold tau for `point` (accept iff U <= tau) on this evaluation set.
///
/// RiskAtMost scans every distinct sample value and keeps the largest
/// coverage whose selective risk is within bound; CoverageExactly and
/// TprExactly take nearest-rank percentiles.
double resolve_tau(const EvalOutcome& outcome, const OperatingPoint& point);

}  // namespace wincascade
