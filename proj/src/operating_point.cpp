#include "wincascade/operating_point.hpp"

#include "wincascade/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace wincascade {

EvalOutcome make_outcome(const ScoreTable& table, const CascadeTrace& trace, double beta) {
  if (trace.n_samples() != table.n_samples()) throw DataError("trace and table have different sample counts");
  return {trace.final_uncertainty, trace.final_prediction, table.labels(), table.domain(), beta};
}

EvalOutcome make_outcome(const ScoreTable& table, const PrefixOutput& prefix, double beta) {
  if (prefix.uncertainty.size() != table.n_samples()) throw DataError("prefix and table have different sample counts");
  return {prefix.uncertainty, prefix.prediction, table.labels(), table.domain(), beta};
}

void validate(const OperatingPoint& point) {
  if (!(point.percent > 0.0 && point.percent < 100.0))
    throw ConfigError("operating point percentage must lie in (0, 100)");
  const bool tpr = point.criterion == Criterion::TprExactly;
  if (point.task == Task::OodDetection && !tpr)
    throw ConfigError("OOD detection operating points are fpr@P (TPR criterion)");
  if (point.task != Task::OodDetection && tpr) throw ConfigError("TPR criterion applies to OOD detection only");
}

OperatingPoint parse_point(Task task, const std::string& text, CoverageBase base) {
  const auto at = text.find('@');
  if (at == std::string::npos) throw ConfigError("operating point '" + text + "' must look like cov@R, risk@C or fpr@P");
  const auto kind = text.substr(0, at);
  double value = 0;
  const auto* first = text.data() + at + 1;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ConfigError("bad percentage in operating point '" + text + "'");
  OperatingPoint p;
  p.task = task;
  p.percent = value;
  p.coverage_base = base;
  if (kind == "cov") {
    p.criterion = Criterion::RiskAtMost;
  } else if (kind == "risk") {
    p.criterion = Criterion::CoverageExactly;
  } else if (kind == "fpr") {
    p.criterion = Criterion::TprExactly;
  } else {
    throw ConfigError("unknown operating point kind '" + kind + "'");
  }
  validate(p);
  return p;
}

namespace {

std::string format_percent(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string point_name(const OperatingPoint& point) {
  switch (point.criterion) {
    case Criterion::RiskAtMost: return "cov@" + format_percent(point.percent);
    case Criterion::CoverageExactly: return "risk@" + format_percent(point.percent);
    case Criterion::TprExactly: return "fpr@" + format_percent(point.percent);
  }
  return "?";
}

std::string to_string(CoverageBase base) { return base == CoverageBase::IdOnly ? "id" : "all"; }

double nearest_rank(std::span<const double> sorted, double q_percent) {
  if (sorted.empty()) throw DataError("percentile of an empty set");
  const auto n = static_cast<double>(sorted.size());
  // q*N is formed before dividing so integral percent values of N land exactly.
  const double exact = q_percent * n / 100.0;
  auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(exact - 1e-9)));
  rank = std::min(rank, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> coverage_population(const EvalOutcome& outcome, Task task, CoverageBase base) {
  std::vector<double> values;
  const bool id_only = task == Task::SelectiveClassification || task == Task::OodDetection ||
                       base == CoverageBase::IdOnly;
  for (Index i = 0; i < outcome.size(); ++i)
    if (!id_only || !outcome.is_ood(i)) values.push_back(outcome.uncertainty[i]);
  return values;
}

double resolve_tau(const EvalOutcome& outcome, const OperatingPoint& point) {
  validate(point);
  if (point.criterion != Criterion::RiskAtMost) {
    auto values = coverage_population(outcome, point.task, point.coverage_base);
    if (values.empty()) throw DataError("no samples to resolve the operating threshold on");
    std::sort(values.begin(), values.end());
    return nearest_rank(values, point.percent);
  }

  std::vector<Index> order;
  for (Index i = 0; i < outcome.size(); ++i)
    if (outcome.participates(i, point.task)) order.push_back(i);
  if (order.empty()) throw DataError("no samples to resolve the operating threshold on");
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return outcome.uncertainty[a] < outcome.uncertainty[b]; });
  double loss = 0.0;
  std::optional<double> best;
  for (std::size_t j = 0; j < order.size(); ++j) {
    loss += outcome.loss(order[j]);
    const double u = outcome.uncertainty[order[j]];
    // Only thresholds at the end of a tie group are realisable.
    if (j + 1 < order.size() && outcome.uncertainty[order[j + 1]] == u) continue;
    // loss/count <= r/100, cross-multiplied so integral losses compare exactly.
    if (loss * 100.0 <= point.percent * static_cast<double>(j + 1)) best = u;
  }
  if (!best)
    throw UnsatisfiableError("no threshold reaches selective risk <= " + format_percent(point.percent) +
                             "% at any coverage");
  return *best;
}

}  // namespace wincascade
