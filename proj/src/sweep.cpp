#include "wincascade/sweep.hpp"

#include "wincascade/error.hpp"

namespace wincascade {

namespace {

void check_exit(const CascadePolicy& base, Index exit) {
  if (exit < 0 || exit >= static_cast<Index>(base.rules.size()))
    throw ConfigError("sweep exit " + std::to_string(exit + 1) + " does not exist");
}

}  // namespace

std::vector<CascadeTrace> sweep_policy(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                                       const CascadePolicy& base, const WindowCalibrator& calibrator,
                                       std::span<const double> half_widths, Index exit) {
  check_exit(base, exit);
  std::vector<CascadeTrace> traces;
  traces.reserve(half_widths.size());
  auto policy = base;
  for (const double width : half_widths) {
    policy.rules[static_cast<std::size_t>(exit)] = calibrator.window(exit, width);
    traces.push_back(run_cascade(prefixes, stage_cost, policy));
  }
  return traces;
}

std::vector<CascadeTrace> sweep_policy(const ScoreTable& table, const CascadePolicy& base,
                                       const WindowCalibrator& calibrator, std::span<const double> half_widths,
                                       Index exit) {
  const auto prefixes = evaluate_all_prefixes(table, base.method);
  return sweep_policy(prefixes, table.stage_cost(), base, calibrator, half_widths, exit);
}

std::vector<CascadeTrace> sweep_single_threshold(std::span<const PrefixOutput> prefixes,
                                                 const Eigen::VectorXd& stage_cost, const CascadePolicy& base,
                                                 const WindowCalibrator& calibrator,
                                                 std::span<const double> pass_percents, Index exit) {
  check_exit(base, exit);
  std::vector<CascadeTrace> traces;
  traces.reserve(pass_percents.size());
  auto policy = base;
  for (const double pass : pass_percents) {
    policy.rules[static_cast<std::size_t>(exit)] = calibrator.threshold_for_pass(exit, pass);
    traces.push_back(run_cascade(prefixes, stage_cost, policy));
  }
  return traces;
}

}  // namespace wincascade
