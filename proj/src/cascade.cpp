#include "wincascade/cascade.hpp"

#include "wincascade/error.hpp"

#include <cmath>
#include <string>

namespace wincascade {

bool fires(const ExitRule& rule, double uncertainty) {
  return std::visit(
      [uncertainty](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleThreshold>) {
          return uncertainty < r.threshold;
        } else {
          return !r.contains(uncertainty);
        }
      },
      rule);
}

void validate(const CascadePolicy& policy, Index n_stages) {
  validate(policy.method);
  if (static_cast<Index>(policy.rules.size()) != n_stages - 1)
    throw ConfigError("policy has " + std::to_string(policy.rules.size()) + " exit rules, table has " +
                      std::to_string(n_stages) + " stages (expected " + std::to_string(n_stages - 1) + " rules)");
  for (std::size_t e = 0; e < policy.rules.size(); ++e) {
    if (const auto* w = std::get_if<Window>(&policy.rules[e])) {
      if (std::isnan(w->lower) || std::isnan(w->upper) || w->lower > w->upper)
        throw ConfigError("window at exit " + std::to_string(e + 1) + " has lower > upper");
    } else if (std::isnan(std::get<SingleThreshold>(policy.rules[e]).threshold)) {
      throw ConfigError("threshold at exit " + std::to_string(e + 1) + " is NaN");
    }
  }
}

std::vector<Index> CascadeTrace::exit_histogram(Index n_stages) const {
  std::vector<Index> counts(static_cast<std::size_t>(n_stages), 0);
  for (Index i = 0; i < exit_stage.size(); ++i) ++counts[static_cast<std::size_t>(exit_stage[i] - 1)];
  return counts;
}

std::vector<double> CascadeTrace::exit_fractions(Index n_stages) const {
  const auto counts = exit_histogram(n_stages);
  std::vector<double> out;
  out.reserve(counts.size());
  for (const auto c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(n_samples()));
  return out;
}

double average_cost(std::span<const Index> exit_histogram, const Eigen::VectorXd& stage_cost) {
  Index total = 0;
  for (const auto c : exit_histogram) total += c;
  double avg = 0.0;
  Index reaching = total;
  for (Index m = 0; m < stage_cost.size(); ++m) {
    avg += static_cast<double>(reaching) / static_cast<double>(total) * stage_cost[m];
    reaching -= exit_histogram[static_cast<std::size_t>(m)];
  }
  return avg;
}

std::vector<PrefixOutput> evaluate_all_prefixes(const ScoreTable& table, const ScoreMethod& method) {
  std::vector<PrefixOutput> out;
  out.reserve(static_cast<std::size_t>(table.n_stages()));
  for (Index l = 1; l <= table.n_stages(); ++l) out.push_back(prefix_evaluate(table, method, l));
  return out;
}

CascadeTrace make_trace(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                        Eigen::VectorXi exit_stage) {
  const auto n_stages = static_cast<Index>(prefixes.size());
  if (n_stages == 0 || stage_cost.size() != n_stages) throw DataError("prefix outputs and stage costs disagree");
  const Index n = exit_stage.size();
  Eigen::VectorXd cumulative(n_stages);
  double running = 0.0;
  for (Index m = 0; m < n_stages; ++m) cumulative[m] = running += stage_cost[m];

  CascadeTrace trace;
  trace.final_uncertainty.resize(n);
  trace.final_prediction.resize(n);
  trace.per_sample_cost.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index s = exit_stage[i];
    if (s < 1 || s > n_stages) throw DataError("exit stage out of range");
    const auto& prefix = prefixes[static_cast<std::size_t>(s - 1)];
    trace.final_uncertainty[i] = prefix.uncertainty[i];
    trace.final_prediction[i] = prefix.prediction[i];
    trace.per_sample_cost[i] = cumulative[s - 1];
  }
  trace.exit_stage = std::move(exit_stage);
  const auto hist = trace.exit_histogram(n_stages);
  trace.avg_cost = average_cost(hist, stage_cost);
  return trace;
}

CascadeTrace run_cascade(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                         const CascadePolicy& policy) {
  const auto n_stages = static_cast<Index>(prefixes.size());
  validate(policy, n_stages);
  const Index n = prefixes.front().uncertainty.size();
  Eigen::VectorXi exit_stage(n);
  for (Index i = 0; i < n; ++i) {
    Index stage = n_stages;
    for (Index l = 1; l < n_stages; ++l) {
      if (fires(policy.rules[static_cast<std::size_t>(l - 1)], prefixes[static_cast<std::size_t>(l - 1)].uncertainty[i])) {
        stage = l;
        break;
      }
    }
    exit_stage[i] = static_cast<int>(stage);
  }
  return make_trace(prefixes, stage_cost, std::move(exit_stage));
}

CascadeTrace run_cascade(const ScoreTable& table, const CascadePolicy& policy) {
  validate(policy, table.n_stages());
  const auto prefixes = evaluate_all_prefixes(table, policy.method);
  return run_cascade(prefixes, table.stage_cost(), policy);
}

CascadeTrace fixed_exit_trace(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                              Index stage) {
  if (prefixes.empty()) throw DataError("no prefix outputs");
  return make_trace(prefixes, stage_cost,
                    Eigen::VectorXi::Constant(prefixes.front().uncertainty.size(), static_cast<int>(stage)));
}

}  // namespace wincascade
