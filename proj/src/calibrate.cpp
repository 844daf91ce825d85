#include "wincascade/calibrate.hpp"

#include "wincascade/error.hpp"

#include <algorithm>
#include <limits>

namespace wincascade {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw DataError("empirical distribution of an empty set");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::rank(double x) const {
  return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
}

double EmpiricalDistribution::value_at_rank(std::int64_t r) const {
  r = std::clamp<std::int64_t>(r, 1, count());
  return sorted_[static_cast<std::size_t>(r - 1)];
}

std::string to_string(WindowBase base) {
  switch (base) {
    case WindowBase::ValidationId: return "id";
    case WindowBase::MixOffline: return "mix-offline";
    case WindowBase::MixStream: return "mix-stream";
  }
  return "?";
}

WindowBase parse_window_base(const std::string& text) {
  if (text == "id") return WindowBase::ValidationId;
  if (text == "mix-offline") return WindowBase::MixOffline;
  if (text == "mix-stream") return WindowBase::MixStream;
  throw ConfigError("unknown window base '" + text + "' (expected id, mix-offline or mix-stream)");
}

namespace {

std::vector<double> expand_widths(std::span<const double> half_widths, std::size_t exits) {
  if (half_widths.size() == exits) return {half_widths.begin(), half_widths.end()};
  if (half_widths.size() == 1) return std::vector<double>(exits, half_widths.front());
  throw ConfigError("got " + std::to_string(half_widths.size()) + " window half-widths for " +
                    std::to_string(exits) + " exits");
}

void check_width(double p) {
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("window half-width must lie in [0, 100] percentiles");
}

}  // namespace

WindowSpec build_windows(const std::vector<std::vector<double>>& val_uncertainties, std::span<const double> taus,
                         std::span<const double> half_widths) {
  if (val_uncertainties.size() != taus.size()) throw ConfigError("one tau per exit is required");
  WindowSpec spec;
  spec.half_width = expand_widths(half_widths, taus.size());
  for (std::size_t e = 0; e < taus.size(); ++e) {
    if (val_uncertainties[e].empty()) throw DataError("empty validation uncertainties at exit " + std::to_string(e + 1));
    check_width(spec.half_width[e]);
    spec.resolved.push_back(window_around(EmpiricalDistribution(val_uncertainties[e]), taus[e], spec.half_width[e]));
  }
  return spec;
}

Window adjust_window_offline(std::span<const double> deployment_uncertainties, double tau, double half_width) {
  check_width(half_width);
  if (deployment_uncertainties.empty()) throw DataError("no deployment uncertainties to adjust the window on");
  return window_around(
      EmpiricalDistribution({deployment_uncertainties.begin(), deployment_uncertainties.end()}), tau, half_width);
}

Window adjust_window_stream(const QuantileSketch& sketch, double tau, double half_width, std::int64_t warmup) {
  check_width(half_width);
  if (sketch.count() < std::max<std::int64_t>(warmup, 1))
    throw DataError("sketch has " + std::to_string(sketch.count()) + " observations, needs " +
                    std::to_string(warmup) + " before adjusting the window");
  return window_around(sketch, tau, half_width);
}

double refit_final_tau(const CascadeTrace& trace, const ScoreTable& table, const OperatingPoint& point, double beta) {
  return resolve_tau(make_outcome(table, trace, beta), point);
}

WindowCalibrator::WindowCalibrator(std::vector<std::vector<double>> per_exit_uncertainties, std::vector<double> taus)
    : taus_(std::move(taus)) {
  if (per_exit_uncertainties.size() != taus_.size()) throw ConfigError("one tau per exit is required");
  for (auto& values : per_exit_uncertainties) dists_.emplace_back(std::move(values));
}

Window WindowCalibrator::window(Index exit, double half_width) const {
  check_width(half_width);
  return window_around(distribution(exit), tau(exit), half_width);
}

SingleThreshold WindowCalibrator::threshold_for_pass(Index exit, double pass_percent) const {
  if (!(pass_percent >= 0.0 && pass_percent <= 100.0)) throw ConfigError("pass fraction must lie in [0, 100]");
  const auto& dist = distribution(exit);
  const auto n = dist.count();
  const auto pass = std::llround(pass_percent * static_cast<double>(n) / 100.0);
  // Samples with U >= threshold move on, so the threshold is the pass-th largest value.
  if (pass == 0) return {std::numeric_limits<double>::infinity()};
  if (pass >= n) return {-std::numeric_limits<double>::infinity()};
  return {dist.value_at_rank(n - pass + 1)};
}

CascadePolicy CalibratedPolicy::cascade_policy() const {
  CascadePolicy policy;
  policy.method = method;
  for (const auto& w : windows) policy.rules.emplace_back(w);
  return policy;
}

Calibration calibrate(const ScoreTable& validation, const CalibrationConfig& config) {
  validate(config.method);
  validate(config.point);
  if (validation.count(Domain::InDistribution) == 0) throw DataError("validation table has no ID samples");
  const auto val_id = validation.filter(Domain::InDistribution);
  const Index exits = val_id.n_stages() - 1;
  const auto prefixes = evaluate_all_prefixes(val_id, config.method);

  std::vector<std::vector<double>> per_exit;
  std::vector<double> taus;
  for (Index e = 0; e < exits; ++e) {
    const auto& prefix = prefixes[static_cast<std::size_t>(e)];
    taus.push_back(resolve_tau(make_outcome(val_id, prefix, config.beta), config.point));
    per_exit.emplace_back(prefix.uncertainty.data(), prefix.uncertainty.data() + prefix.uncertainty.size());
  }
  const auto spec = build_windows(per_exit, taus, config.half_widths);

  CalibratedPolicy policy;
  policy.point = config.point;
  policy.method = config.method;
  policy.exit_taus = taus;
  policy.half_widths = spec.half_width;
  policy.windows = spec.resolved;
  policy.beta = config.beta;
  policy.window_base = config.window_base;
  const auto trace = run_cascade(prefixes, val_id.stage_cost(), policy.cascade_policy());
  policy.final_tau = refit_final_tau(trace, val_id, config.point, config.beta);
  policy.point.tau = policy.final_tau;
  return {policy, WindowCalibrator(std::move(per_exit), std::move(taus))};
}

namespace {

void check_shape(std::span<const PrefixOutput> prefixes, const CalibratedPolicy& policy) {
  if (static_cast<Index>(prefixes.size()) != policy.n_stages())
    throw DataError("policy is for " + std::to_string(policy.n_stages()) + " stages, table has " +
                    std::to_string(prefixes.size()));
  if (policy.exit_taus.size() != policy.windows.size() || policy.half_widths.size() != policy.windows.size())
    throw ConfigError("policy needs one tau, one half-width and one window per exit");
}

}  // namespace

std::vector<Window> offline_adjusted_windows(std::span<const PrefixOutput> prefixes, const CalibratedPolicy& policy) {
  check_shape(prefixes, policy);
  const Index n = prefixes.front().uncertainty.size();
  std::vector<Index> reaching(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) reaching[static_cast<std::size_t>(i)] = i;
  std::vector<Window> windows;
  for (std::size_t e = 0; e < policy.windows.size(); ++e) {
    if (reaching.empty()) {
      windows.push_back(policy.windows[e]);
      continue;
    }
    const auto& u = prefixes[e].uncertainty;
    std::vector<double> values;
    values.reserve(reaching.size());
    for (const Index i : reaching) values.push_back(u[i]);
    const auto w = adjust_window_offline(values, policy.exit_taus[e], policy.half_widths[e]);
    windows.push_back(w);
    std::erase_if(reaching, [&](Index i) { return !w.contains(u[i]); });
  }
  return windows;
}

CascadeTrace run_deployed(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                          const CalibratedPolicy& policy, double sketch_epsilon, std::int64_t warmup) {
  check_shape(prefixes, policy);
  switch (policy.window_base) {
    case WindowBase::ValidationId: return run_cascade(prefixes, stage_cost, policy.cascade_policy());
    case WindowBase::MixOffline: {
      auto adjusted = policy;
      adjusted.windows = offline_adjusted_windows(prefixes, policy);
      return run_cascade(prefixes, stage_cost, adjusted.cascade_policy());
    }
    case WindowBase::MixStream: break;
  }
  const auto n_stages = static_cast<Index>(prefixes.size());
  const Index n = prefixes.front().uncertainty.size();
  std::vector<QuantileSketch> sketches(policy.windows.size(), QuantileSketch(sketch_epsilon));
  Eigen::VectorXi exit_stage(n);
  for (Index i = 0; i < n; ++i) {
    Index stage = n_stages;
    for (std::size_t e = 0; e < policy.windows.size(); ++e) {
      const double u = prefixes[e].uncertainty[i];
      auto& sketch = sketches[e];
      sketch.insert(u);
      const Window w = sketch.count() >= warmup
                           ? adjust_window_stream(sketch, policy.exit_taus[e], policy.half_widths[e], warmup)
                           : policy.windows[e];
      if (!w.contains(u)) {
        stage = static_cast<Index>(e) + 1;
        break;
      }
    }
    exit_stage[i] = static_cast<int>(stage);
  }
  return make_trace(prefixes, stage_cost, std::move(exit_stage));
}

CascadeTrace run_deployed(const ScoreTable& table, const CalibratedPolicy& policy, double sketch_epsilon,
                          std::int64_t warmup) {
  const auto prefixes = evaluate_all_prefixes(table, policy.method);
  return run_deployed(prefixes, table.stage_cost(), policy, sketch_epsilon, warmup);
}

}  // namespace wincascade
