#pragma once

#include "wincascade/cascade.hpp"
#include "wincascade/score_table.hpp"
#include "wincascade/uncertainty.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wincascade {

/// Everything the task losses need for one evaluation set.
struct EvalOutcome {
  Eigen::VectorXd uncertainty;
  Eigen::VectorXi prediction;
  Eigen::VectorXi label;
  std::vector<Domain> domain;
  double beta = 1.0;  ///< SCOD cost of accepting an OOD sample

  Index size() const { return uncertainty.size(); }
  bool is_ood(Index i) const { return domain[static_cast<std::size_t>(i)] == Domain::OutOfDistribution; }
  bool correct(Index i) const { return !is_ood(i) && prediction[i] == label[i]; }

  /// Whether sample i takes part in `task` (SC only looks at ID samples).
  bool participates(Index i, Task task) const { return task != Task::SelectiveClassification || !is_ood(i); }
  /// 0/1 loss on ID samples, beta on OOD samples.
  double loss(Index i) const {
    if (is_ood(i)) return beta;
    return prediction[i] == label[i] ? 0.0 : 1.0;
  }
};

EvalOutcome make_outcome(const ScoreTable& table, const CascadeTrace& trace, double beta = 1.0);
EvalOutcome make_outcome(const ScoreTable& table, const PrefixOutput& prefix, double beta = 1.0);

}  // namespace wincascade
