#pragma once

#include "wincascade/score_table.hpp"
#include "wincascade/uncertainty.hpp"

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <variant>
#include <vector>

namespace wincascade {

/// Exit when U < threshold.
struct SingleThreshold {
  double threshold = 0.0;
};

/// Exit when U lies outside [lower, upper]; both endpoints are inside.
struct Window {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double u) const { return u >= lower && u <= upper; }
};

using ExitRule = std::variant<SingleThreshold, Window>;

/// Window that passes every finite uncertainty on to the next stage.
inline Window all_pass_window() { return {}; }
/// Window that passes nothing: every finite U lies below it.
inline Window no_pass_window() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {inf, inf};
}

bool fires(const ExitRule& rule, double uncertainty);

/// One rule per non-final stage plus the score method shared by all exits.
struct CascadePolicy {
  std::vector<ExitRule> rules;
  ScoreMethod method;
};

void validate(const CascadePolicy& policy, Index n_stages);

struct CascadeTrace {
  Eigen::VectorXi exit_stage;  ///< 1-based stage each sample exited at
  Eigen::VectorXd final_uncertainty;
  Eigen::VectorXi final_prediction;
  Eigen::VectorXd per_sample_cost;
  double avg_cost = 0.0;

  Index n_samples() const { return exit_stage.size(); }
  /// Number of samples exiting at each stage (index m-1 for stage m).
  std::vector<Index> exit_histogram(Index n_stages) const;
  std::vector<double> exit_fractions(Index n_stages) const;
};

/// Mean cost from an exit histogram: sum over m of (fraction reaching m) * cost[m].
double average_cost(std::span<const Index> exit_histogram, const Eigen::VectorXd& stage_cost);

/// Prefix outputs for l = 1..M.
std::vector<PrefixOutput> evaluate_all_prefixes(const ScoreTable& table, const ScoreMethod& method);

/// Builds a trace from per-sample exit stages, taking each sample's outputs
/// from the prefix it exited at.
CascadeTrace make_trace(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                        Eigen::VectorXi exit_stage);

/// Runs the exit policy over every sample of the table.
CascadeTrace run_cascade(const ScoreTable& table, const CascadePolicy& policy);
/// Same, reusing prefix outputs already computed with `policy.method`.
CascadeTrace run_cascade(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                         const CascadePolicy& policy);

/// Trace where every sample exits at stage `stage` (1-based).
CascadeTrace fixed_exit_trace(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                              Index stage);

}  // namespace wincascade
