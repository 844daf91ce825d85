#pragma once

#include "wincascade/cascade.hpp"
#include "wincascade/error.hpp"
#include "wincascade/operating_point.hpp"
#include "wincascade/quantile_sketch.hpp"
#include "wincascade/score_table.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace wincascade {

/// Exact empirical distribution over a sorted copy of the values.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values);

  std::int64_t count() const { return static_cast<std::int64_t>(sorted_.size()); }
  /// Number of values <= x.
  double rank(double x) const;
  /// r-th smallest value, r in [1, count()].
  double value_at_rank(std::int64_t r) const;
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// Window capturing +-half_width percentiles of `dist` either side of tau.
///
/// With k = rank(tau) and P = half_width * N / 100 the window spans ranks
/// [k - max(1, round(P)) + 1, k + round(P)]: round(P) samples above tau and
/// as many at or below it. A side whose percentile reaches 0 or 100 is left
/// open (-inf / +inf) and only the other side expands. half_width = 0 gives
/// [tau, tau].
template <typename Distribution>
Window window_around(const Distribution& dist, double tau, double half_width) {
  if (!(half_width >= 0.0)) throw ConfigError("window half-width must be >= 0");
  if (half_width == 0.0) return {tau, tau};
  const auto n = static_cast<double>(dist.count());
  const double k = std::round(dist.rank(tau));
  const double reach = half_width * n / 100.0;
  constexpr double slack = 1e-9;
  Window w;
  if (k > reach + slack) {
    const auto below = std::max<std::int64_t>(1, std::llround(reach));
    w.lower = std::min(tau, dist.value_at_rank(static_cast<std::int64_t>(k) - below + 1));
  }
  if (n - k > reach + slack) {
    const auto above = std::llround(reach);
    w.upper = above == 0 ? tau : std::max(tau, dist.value_at_rank(static_cast<std::int64_t>(k) + above));
  }
  return w;
}

enum class WindowBase {
  ValidationId,  ///< percentiles of ID validation uncertainties
  MixOffline,    ///< exact percentiles of the deployment stream
  MixStream,     ///< running percentiles of the deployment stream
};

std::string to_string(WindowBase base);
WindowBase parse_window_base(const std::string& text);

struct WindowSpec {
  std::vector<double> half_width;  ///< percent, per exit
  WindowBase base = WindowBase::ValidationId;
  std::vector<Window> resolved;  ///< per exit
};

/// Windows around each exit's tau on that exit's validation uncertainties.
WindowSpec build_windows(const std::vector<std::vector<double>>& val_uncertainties, std::span<const double> taus,
                         std::span<const double> half_widths);

/// Deployment-adjusted window from exact percentiles of the stream.
Window adjust_window_offline(std::span<const double> deployment_uncertainties, double tau, double half_width);

inline constexpr std::int64_t kDefaultWarmup = 200;
inline constexpr double kDefaultSketchEpsilon = 0.005;

/// Deployment-adjusted window from a running sketch; throws DataError
/// before `warmup` values were observed.
Window adjust_window_stream(const QuantileSketch& sketch, double tau, double half_width,
                            std::int64_t warmup = kDefaultWarmup);

/// New deployed threshold resolved on the exited uncertainties of a
/// validation trace.
double refit_final_tau(const CascadeTrace& trace, const ScoreTable& table, const OperatingPoint& point,
                       double beta = 1.0);

/// Per-exit validation distributions and thresholds; produces windows and
/// single thresholds for any width or pass fraction.
class WindowCalibrator {
 public:
  WindowCalibrator(std::vector<std::vector<double>> per_exit_uncertainties, std::vector<double> taus);

  Index n_exits() const { return static_cast<Index>(taus_.size()); }
  double tau(Index exit) const { return taus_.at(static_cast<std::size_t>(exit)); }
  const EmpiricalDistribution& distribution(Index exit) const { return dists_.at(static_cast<std::size_t>(exit)); }

  /// +-half_width window around tau for exit `exit` (0-based).
  Window window(Index exit, double half_width) const;
  /// Threshold passing the most uncertain pass_percent of validation samples on.
  SingleThreshold threshold_for_pass(Index exit, double pass_percent) const;

 private:
  std::vector<EmpiricalDistribution> dists_;
  std::vector<double> taus_;
};

struct CalibrationConfig {
  OperatingPoint point;
  ScoreMethod method;
  std::vector<double> half_widths;  ///< per exit; a single entry applies to every exit
  double beta = 1.0;
  WindowBase window_base = WindowBase::ValidationId;
};

/// Everything a deployed window cascade needs.
struct CalibratedPolicy {
  OperatingPoint point;  ///< point.tau holds the refit final threshold
  ScoreMethod method;
  std::vector<double> exit_taus;
  std::vector<double> half_widths;
  std::vector<Window> windows;
  double final_tau = 0.0;
  double beta = 1.0;
  WindowBase window_base = WindowBase::ValidationId;

  Index n_stages() const { return static_cast<Index>(windows.size()) + 1; }
  CascadePolicy cascade_policy() const;
};

struct Calibration {
  CalibratedPolicy policy;
  WindowCalibrator calibrator;
};

/// Resolves tau per exit on the ID samples of `validation`, builds windows,
/// runs the cascade on validation and refits the final tau on its exits.
Calibration calibrate(const ScoreTable& validation, const CalibrationConfig& config);

/// Runs a calibrated policy on a deployment table. ValidationId uses the
/// stored windows. MixOffline processes the stream stage by stage and sets
/// each exit's window from exact percentiles of the samples reaching it.
/// MixStream feeds each exit's sketch in stream order and switches to the
/// sketch-derived window once `warmup` values were seen.
CascadeTrace run_deployed(const ScoreTable& table, const CalibratedPolicy& policy,
                          double sketch_epsilon = kDefaultSketchEpsilon, std::int64_t warmup = kDefaultWarmup);
CascadeTrace run_deployed(std::span<const PrefixOutput> prefixes, const Eigen::VectorXd& stage_cost,
                          const CalibratedPolicy& policy, double sketch_epsilon = kDefaultSketchEpsilon,
                          std::int64_t warmup = kDefaultWarmup);

/// Windows an offline-adjusted deployment would use (one per exit).
std::vector<Window> offline_adjusted_windows(std::span<const PrefixOutput> prefixes, const CalibratedPolicy& policy);

}  // namespace wincascade
