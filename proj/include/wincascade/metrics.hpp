#pragma once

#include "wincascade/operating_point.hpp"
#include "wincascade/outcome.hpp"

#include <span>
#include <vector>

namespace wincascade {

struct RcPoint {
  double coverage = 0.0;  ///< fraction in (0, 1]
  double risk = 0.0;      ///< fraction
};

/// Risk-coverage curve: one point per distinct uncertainty value, samples
/// with equal U accepted together. Coverage is strictly increasing and the
/// last point has coverage 1.
struct RcCurve {
  std::vector<RcPoint> points;
};

/// SC uses ID samples with 0/1 loss; SCOD uses every sample, OOD ones
/// costing beta.
RcCurve rc_curve(const EvalOutcome& outcome, Task task);

/// Area under the risk-coverage curve: each point's risk weighted by the
/// coverage it adds. Without ties this is the mean of the N prefix risks.
double aurc(const RcCurve& curve);

/// Selective risk (fraction) of the samples accepted at tau; 0 when nothing is accepted.
double selective_risk(const EvalOutcome& outcome, Task task, double tau);

/// Fraction of the coverage population with U <= tau.
double coverage_at(const EvalOutcome& outcome, Task task, CoverageBase base, double tau);

/// Largest coverage (percent) whose risk is <= risk_percent; 0 if none.
double cov_at_risk(const EvalOutcome& outcome, Task task, double risk_percent);

/// Selective risk (percent) at the nearest-rank threshold that covers cov_percent.
double risk_at_cov(const EvalOutcome& outcome, Task task, double cov_percent,
                   CoverageBase base = CoverageBase::IdOnly);

/// P(U_id < U_ood) + P(tie)/2 from mid-rank statistics.
double auroc(std::span<const double> id_uncertainty, std::span<const double> ood_uncertainty);

/// Percent of OOD samples accepted (U <= tau) at the threshold giving tpr_percent on ID.
double fpr_at_tpr(std::span<const double> id_uncertainty, std::span<const double> ood_uncertainty,
                  double tpr_percent);

/// Splits outcome uncertainties by domain.
std::pair<std::vector<double>, std::vector<double>> split_by_domain(const EvalOutcome& outcome);

/// Value of the point's metric on this evaluation set: Cov@r, Risk@c or FPR@p (percent).
double metric_value(const EvalOutcome& outcome, const OperatingPoint& point);

}  // namespace wincascade
