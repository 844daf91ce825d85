#pragma once

#include "wincascade/cascade.hpp"
#include "wincascade/operating_point.hpp"
#include "wincascade/score_table.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wincascade {

struct MetricsRow {
  std::string policy;  ///< label, e.g. "cascade", "stage-1", "ensemble"
  std::string params;  ///< free-form policy parameters
  Task task = Task::SelectiveClassification;
  std::string metric;  ///< "cov@5", "risk@80", "fpr@95", "aurc", "auroc", "risk@tau", ...
  double value = 0.0;  ///< percent for threshold metrics, fraction for aurc/auroc
  double avg_cost = 0.0;
  std::vector<double> exit_fraction;
  double accuracy_all = 0.0;       ///< ID accuracy over every sample
  double accuracy_accepted = 0.0;  ///< ID accuracy over accepted samples (NaN when none)
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  void append(const MetricsReport& other);
  /// Full-precision CSV; `header_comment` lines are written first, each prefixed with '#'.
  void write_csv(std::ostream& out, const std::vector<std::string>& header_comment = {}) const;
  /// Human-readable table with percentages at 0.1 resolution.
  std::string to_text() const;
};

/// One row per operating point (metric resolved on this evaluation set), a
/// threshold-free row per task (AURC or AUROC), and, for points carrying a
/// deployed tau, the realised risk/coverage (or FPR/TPR) at that tau.
MetricsReport report(const CascadeTrace& trace, const ScoreTable& table, std::span<const OperatingPoint> points,
                     double beta, const std::string& label = "cascade", const std::string& params = "");

}  // namespace wincascade
