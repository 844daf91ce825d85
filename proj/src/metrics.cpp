#include "wincascade/metrics.hpp"

#include "wincascade/error.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

namespace wincascade {

namespace {

std::vector<Index> sorted_participants(const EvalOutcome& outcome, Task task) {
  std::vector<Index> order;
  for (Index i = 0; i < outcome.size(); ++i)
    if (outcome.participates(i, task)) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return outcome.uncertainty[a] < outcome.uncertainty[b]; });
  return order;
}

}  // namespace

RcCurve rc_curve(const EvalOutcome& outcome, Task task) {
  if (task == Task::OodDetection) throw ConfigError("risk-coverage curves apply to SC and SCOD");
  const auto order = sorted_participants(outcome, task);
  if (order.empty()) throw DataError("risk-coverage curve of an empty evaluation set");
  const auto n = static_cast<double>(order.size());
  RcCurve curve;
  double loss = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    loss += outcome.loss(order[j]);
    if (j + 1 < order.size() && outcome.uncertainty[order[j + 1]] == outcome.uncertainty[order[j]]) continue;
    const auto accepted = static_cast<double>(j + 1);
    curve.points.push_back({accepted / n, loss / accepted});
  }
  return curve;
}

double aurc(const RcCurve& curve) {
  double area = 0.0;
  double previous = 0.0;
  for (const auto& p : curve.points) {
    area += (p.coverage - previous) * p.risk;
    previous = p.coverage;
  }
  return area;
}

double selective_risk(const EvalOutcome& outcome, Task task, double tau) {
  double loss = 0.0;
  Index accepted = 0;
  for (Index i = 0; i < outcome.size(); ++i) {
    if (!outcome.participates(i, task) || !(outcome.uncertainty[i] <= tau)) continue;
    loss += outcome.loss(i);
    ++accepted;
  }
  return accepted == 0 ? 0.0 : loss / static_cast<double>(accepted);
}

double coverage_at(const EvalOutcome& outcome, Task task, CoverageBase base, double tau) {
  const auto values = coverage_population(outcome, task, base);
  if (values.empty()) return 0.0;
  const auto accepted = std::count_if(values.begin(), values.end(), [tau](double u) { return u <= tau; });
  return static_cast<double>(accepted) / static_cast<double>(values.size());
}

double cov_at_risk(const EvalOutcome& outcome, Task task, double risk_percent) {
  const auto curve = rc_curve(outcome, task);
  double best = 0.0;
  for (const auto& p : curve.points)
    if (p.risk * 100.0 <= risk_percent + 1e-12) best = std::max(best, p.coverage);
  return best * 100.0;
}

double risk_at_cov(const EvalOutcome& outcome, Task task, double cov_percent, CoverageBase base) {
  OperatingPoint point{task, Criterion::CoverageExactly, cov_percent, base, std::nullopt};
  const double tau = resolve_tau(outcome, point);
  return selective_risk(outcome, task, tau) * 100.0;
}

double auroc(std::span<const double> id_uncertainty, std::span<const double> ood_uncertainty) {
  if (id_uncertainty.empty() || ood_uncertainty.empty()) throw DataError("AUROC needs both ID and OOD samples");
  struct Item {
    double u;
    bool ood;
  };
  std::vector<Item> items;
  items.reserve(id_uncertainty.size() + ood_uncertainty.size());
  for (double u : id_uncertainty) items.push_back({u, false});
  for (double u : ood_uncertainty) items.push_back({u, true});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.u < b.u; });
  // Twice the mid-rank keeps everything in integers: a tie group covering
  // ranks [lo+1, hi] has doubled mid-rank lo + hi + 1.
  std::uint64_t ood_rank_x2 = 0;
  std::size_t lo = 0;
  while (lo < items.size()) {
    std::size_t hi = lo + 1;
    while (hi < items.size() && items[hi].u == items[lo].u) ++hi;
    const std::uint64_t rank_x2 = lo + hi + 1;
    for (std::size_t j = lo; j < hi; ++j)
      if (items[j].ood) ood_rank_x2 += rank_x2;
    lo = hi;
  }
  const auto n_ood = static_cast<std::uint64_t>(ood_uncertainty.size());
  const auto n_id = static_cast<std::uint64_t>(id_uncertainty.size());
  // 2 * (Mann-Whitney U of the OOD group) = #(ood > id) * 2 + #ties.
  const std::uint64_t u_x2 = ood_rank_x2 - n_ood * (n_ood + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(n_id) * static_cast<double>(n_ood));
}

double fpr_at_tpr(std::span<const double> id_uncertainty, std::span<const double> ood_uncertainty,
                  double tpr_percent) {
  if (id_uncertainty.empty() || ood_uncertainty.empty()) throw DataError("FPR@TPR needs both ID and OOD samples");
  if (!(tpr_percent > 0.0 && tpr_percent < 100.0)) throw ConfigError("TPR percentage must lie in (0, 100)");
  std::vector<double> sorted(id_uncertainty.begin(), id_uncertainty.end());
  std::sort(sorted.begin(), sorted.end());
  const double tau = nearest_rank(sorted, tpr_percent);
  const auto accepted =
      std::count_if(ood_uncertainty.begin(), ood_uncertainty.end(), [tau](double u) { return u <= tau; });
  return 100.0 * static_cast<double>(accepted) / static_cast<double>(ood_uncertainty.size());
}

std::pair<std::vector<double>, std::vector<double>> split_by_domain(const EvalOutcome& outcome) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (Index i = 0; i < outcome.size(); ++i)
    (outcome.is_ood(i) ? out.second : out.first).push_back(outcome.uncertainty[i]);
  return out;
}

double metric_value(const EvalOutcome& outcome, const OperatingPoint& point) {
  validate(point);
  switch (point.criterion) {
    case Criterion::RiskAtMost: return cov_at_risk(outcome, point.task, point.percent);
    case Criterion::CoverageExactly: return risk_at_cov(outcome, point.task, point.percent, point.coverage_base);
    case Criterion::TprExactly: {
      const auto [id, ood] = split_by_domain(outcome);
      return fpr_at_tpr(id, ood, point.percent);
    }
  }
  return 0.0;
}

}  // namespace wincascade
