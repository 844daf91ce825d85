#include "oracles.hpp"
#include "wincascade/error.hpp"
#include "wincascade/metrics.hpp"

#include <gtest/gtest.h>

using namespace wincascade;
namespace wt = wincascade::testing;

namespace {

/// Builds an outcome from (U, correct, ood) triples; label 0, prediction 0 or 1.
EvalOutcome outcome_of(const std::vector<std::tuple<double, bool, bool>>& rows, double beta = 1.0) {
  EvalOutcome o;
  const auto n = static_cast<Index>(rows.size());
  o.uncertainty.resize(n);
  o.prediction.resize(n);
  o.label.resize(n);
  o.beta = beta;
  for (Index i = 0; i < n; ++i) {
    const auto& [u, correct, ood] = rows[static_cast<std::size_t>(i)];
    o.uncertainty[i] = u;
    o.label[i] = ood ? kOodLabel : 0;
    o.prediction[i] = correct ? 0 : 1;
    o.domain.push_back(ood ? Domain::OutOfDistribution : Domain::InDistribution);
  }
  return o;
}

EvalOutcome random_outcome(std::mt19937& gen, Index n, double ood_fraction, double beta, bool ties) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::tuple<double, bool, bool>> rows;
  for (Index i = 0; i < n; ++i) {
    double u = unit(gen);
    if (ties) u = std::round(u * 20) / 20;
    const bool ood = unit(gen) < ood_fraction;
    const bool correct = unit(gen) > 0.2 + 0.6 * u;
    rows.emplace_back(u, correct, ood);
  }
  return outcome_of(rows, beta);
}

std::vector<wt::Accepted> accepted_list(const EvalOutcome& o, Task task) {
  std::vector<wt::Accepted> out;
  for (Index i = 0; i < o.size(); ++i) {
    if (task == Task::SelectiveClassification && o.is_ood(i)) continue;
    const double loss = o.is_ood(i) ? o.beta : (o.prediction[i] == o.label[i] ? 0.0 : 1.0);
    out.push_back({o.uncertainty[i], loss});
  }
  return out;
}

}  // namespace

TEST(RcCurve, AllCorrectHasZeroRisk) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, true, false}});
  for (const auto& p : rc_curve(o, Task::SelectiveClassification).points) EXPECT_EQ(p.risk, 0.0);
  EXPECT_EQ(aurc(rc_curve(o, Task::SelectiveClassification)), 0.0);
  EXPECT_DOUBLE_EQ(cov_at_risk(o, Task::SelectiveClassification, 5), 100.0);
}

TEST(RcCurve, ThreeSampleExample) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, false, false}, {0.3, true, false}});
  const auto c = rc_curve(o, Task::SelectiveClassification);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_DOUBLE_EQ(c.points[0].coverage, 1.0 / 3);
  EXPECT_DOUBLE_EQ(c.points[0].risk, 0.0);
  EXPECT_DOUBLE_EQ(c.points[1].coverage, 2.0 / 3);
  EXPECT_DOUBLE_EQ(c.points[1].risk, 0.5);
  EXPECT_DOUBLE_EQ(c.points[2].coverage, 1.0);
  EXPECT_DOUBLE_EQ(c.points[2].risk, 1.0 / 3);
  EXPECT_NEAR(aurc(c), 5.0 / 18, 1e-15);
  EXPECT_NEAR(cov_at_risk(o, Task::SelectiveClassification, 5), 100.0 / 3, 1e-12);
}

TEST(RcCurve, AllWrongAurcIsOne) {
  const auto o = outcome_of({{0.1, false, false}, {0.5, false, false}, {0.7, false, false}});
  EXPECT_DOUBLE_EQ(aurc(rc_curve(o, Task::SelectiveClassification)), 1.0);
  EXPECT_EQ(cov_at_risk(o, Task::SelectiveClassification, 5), 0.0);
}

TEST(RcCurve, ScodExample) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, false, true}}, 1.0);
  const auto c = rc_curve(o, Task::Scod);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_DOUBLE_EQ(c.points[0].coverage, 0.5);
  EXPECT_DOUBLE_EQ(c.points[0].risk, 0.0);
  EXPECT_DOUBLE_EQ(c.points[1].coverage, 1.0);
  EXPECT_DOUBLE_EQ(c.points[1].risk, 0.5);
  // SC ignores the OOD sample entirely
  EXPECT_EQ(rc_curve(o, Task::SelectiveClassification).points.size(), 1u);
}

TEST(RcCurve, TiesAreOneThreshold) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, false, false}, {0.2, true, false}, {0.4, true, false}});
  const auto c = rc_curve(o, Task::SelectiveClassification);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_DOUBLE_EQ(c.points[1].coverage, 0.75);
  EXPECT_DOUBLE_EQ(c.points[1].risk, 1.0 / 3);
}

TEST(RcCurve, MatchesThresholdEnumeration) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 60; ++trial) {
    const auto task = trial % 2 ? Task::Scod : Task::SelectiveClassification;
    const auto o = random_outcome(gen, 5 + trial * 7, 0.3, trial % 3 * 0.5, trial % 4 == 0);
    const auto expected = wt::rc_by_thresholds(accepted_list(o, task));
    const auto got = rc_curve(o, task);
    ASSERT_EQ(got.points.size(), expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      EXPECT_NEAR(got.points[j].coverage, expected[j].first, 1e-15);
      EXPECT_NEAR(got.points[j].risk, expected[j].second, 1e-14);
      if (j) EXPECT_GT(got.points[j].coverage, got.points[j - 1].coverage);
    }
    EXPECT_NEAR(aurc(got), wt::aurc_by_enumeration(accepted_list(o, task)), 1e-12);
  }
}

TEST(RcCurve, CovAtRiskConsistentWithCurve) {
  std::mt19937 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto o = random_outcome(gen, 300, 0.0, 1.0, trial % 2 == 0);
    const auto curve = rc_curve(o, Task::SelectiveClassification);
    for (const double r : {2.0, 5.0, 10.0, 30.0}) {
      const double cov = cov_at_risk(o, Task::SelectiveClassification, r);
      double best = 0;
      for (const auto& p : curve.points)
        if (p.risk <= r / 100.0 + 1e-15) best = std::max(best, p.coverage);
      EXPECT_NEAR(cov, 100 * best, 1e-9);
      for (const auto& p : curve.points)
        if (std::abs(p.coverage * 100 - cov) < 1e-9) EXPECT_LE(p.risk * 100, r + 1e-9);
    }
  }
}

TEST(SelectiveRisk, DirectSummation) {
  std::mt19937 gen(13);
  for (int trial = 0; trial < 40; ++trial) {
    const auto o = random_outcome(gen, 200, 0.4, 0.7, trial % 2);
    for (const double tau : {0.1, 0.35, 0.5, 0.9}) {
      for (const auto task : {Task::SelectiveClassification, Task::Scod}) {
        double loss = 0, n = 0;
        for (const auto& a : accepted_list(o, task))
          if (a.uncertainty <= tau) loss += a.loss, n += 1;
        EXPECT_NEAR(selective_risk(o, task, tau), n ? loss / n : 0.0, 1e-15);
      }
    }
  }
}

TEST(Auroc, Examples) {
  EXPECT_DOUBLE_EQ(auroc(std::vector{0.1, 0.2}, std::vector{0.3, 0.4}), 1.0);
  EXPECT_DOUBLE_EQ(fpr_at_tpr(std::vector{0.1, 0.2}, std::vector{0.3, 0.4}, 95), 0.0);
  EXPECT_DOUBLE_EQ(auroc(std::vector{0.1, 0.3}, std::vector{0.2, 0.4}), 0.75);
  const std::vector<double> same{0.3, 0.1, 0.7, 0.7};
  EXPECT_DOUBLE_EQ(auroc(same, same), 0.5);
  EXPECT_THROW(auroc(std::vector<double>{}, same), DataError);
}

TEST(Auroc, MatchesPairCounting) {
  std::mt19937 gen(14);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> id(1 + trial * 13), ood(1 + trial * 7);
    for (auto& x : id) x = trial % 3 == 0 ? std::round(u(gen) * 10) : u(gen);
    for (auto& x : ood) x = trial % 3 == 0 ? std::round(u(gen) * 10 + 2) : u(gen) + 0.3;
    EXPECT_NEAR(auroc(id, ood), wt::auroc_by_pairs(id, ood), 1e-10);
  }
}

TEST(FprAtTpr, ThresholdFromIdPercentile) {
  std::vector<double> id, ood;
  for (int i = 1; i <= 100; ++i) id.push_back(i);
  for (int i = 0; i < 10; ++i) ood.push_back(90.5 + i);  // 90.5 .. 99.5
  // TPR 95 -> tau = 95th value = 95; OOD with U <= 95: 90.5..94.5 -> 5 of 10
  EXPECT_DOUBLE_EQ(fpr_at_tpr(id, ood, 95), 50.0);
}

TEST(RiskAtCov, UsesNearestRankThreshold) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, false, false}, {0.3, true, false}, {0.4, false, false}});
  EXPECT_DOUBLE_EQ(risk_at_cov(o, Task::SelectiveClassification, 50), 50.0);
  EXPECT_DOUBLE_EQ(risk_at_cov(o, Task::SelectiveClassification, 25), 0.0);
  EXPECT_DOUBLE_EQ(risk_at_cov(o, Task::SelectiveClassification, 80), 50.0);
}

TEST(Scod, ZeroOodReducesToSc) {
  std::mt19937 gen(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto o = random_outcome(gen, 500, 0.0, 1.0, trial % 2);
    EXPECT_NEAR(aurc(rc_curve(o, Task::Scod)), aurc(rc_curve(o, Task::SelectiveClassification)), 1e-12);
  }
}

TEST(Scod, BetaZeroOnlyCountsIdErrors) {
  std::mt19937 gen(16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto o = random_outcome(gen, 400, 0.5, 0.0, false);
    for (const double tau : {0.2, 0.6}) {
      double id_errors = 0, accepted = 0;
      for (Index i = 0; i < o.size(); ++i)
        if (o.uncertainty[i] <= tau) accepted += 1, id_errors += !o.is_ood(i) && o.prediction[i] != o.label[i];
      EXPECT_NEAR(selective_risk(o, Task::Scod, tau), id_errors / accepted, 1e-15);
    }
  }
}

TEST(Metrics, MonotoneTransformInvariance) {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto o = random_outcome(gen, 300, 0.4, 1.0, trial % 2);
    auto t = o;
    t.uncertainty = (o.uncertainty.array() * 3.0).exp() - 7.0;
    for (const auto task : {Task::SelectiveClassification, Task::Scod})
      EXPECT_NEAR(aurc(rc_curve(o, task)), aurc(rc_curve(t, task)), 1e-12);
    EXPECT_DOUBLE_EQ(cov_at_risk(o, Task::SelectiveClassification, 10), cov_at_risk(t, Task::SelectiveClassification, 10));
    const auto [a, b] = split_by_domain(o);
    const auto [c, d] = split_by_domain(t);
    EXPECT_DOUBLE_EQ(auroc(a, b), auroc(c, d));
    EXPECT_DOUBLE_EQ(fpr_at_tpr(a, b, 80), fpr_at_tpr(c, d, 80));
  }
}

TEST(OperatingPoint, NearestRankExample) {
  const auto o = outcome_of({{0.3, true, false}, {0.1, true, false}, {0.4, true, false}, {0.2, true, false}});
  OperatingPoint p{Task::SelectiveClassification, Criterion::CoverageExactly, 50.0};
  EXPECT_DOUBLE_EQ(resolve_tau(o, p), 0.2);
}

TEST(OperatingPoint, RiskAllCorrectTakesFullCoverage) {
  const auto o = outcome_of({{0.3, true, false}, {0.1, true, false}, {0.9, true, false}});
  EXPECT_DOUBLE_EQ(resolve_tau(o, {Task::SelectiveClassification, Criterion::RiskAtMost, 5.0}), 0.9);
}

TEST(OperatingPoint, RiskTenSampleExample) {
  std::vector<std::tuple<double, bool, bool>> rows;
  for (int i = 0; i < 10; ++i) rows.emplace_back(0.1 * (i + 1), i < 8, false);
  const auto o = outcome_of(rows);
  // prefix 9 has risk 1/9 > 10%, prefix 8 has risk 0; prefix 10 has 2/10 = 20%
  EXPECT_DOUBLE_EQ(resolve_tau(o, {Task::SelectiveClassification, Criterion::RiskAtMost, 10.0}), 0.1 * 8);
}

TEST(OperatingPoint, RiskMatchesEnumeration) {
  std::mt19937 gen(18);
  for (int trial = 0; trial < 60; ++trial) {
    const auto task = trial % 2 ? Task::Scod : Task::SelectiveClassification;
    const auto o = random_outcome(gen, 20 + trial * 5, 0.3, 1.0, trial % 3 == 0);
    const double r = 5.0 + trial % 4 * 5.0;
    double best_cov = -1, best_tau = 0;
    for (const auto& a : accepted_list(o, task)) {
      double n = 0, loss = 0;
      for (const auto& b : accepted_list(o, task))
        if (b.uncertainty <= a.uncertainty) n += 1, loss += b.loss;
      if (loss / n <= r / 100 + 1e-15 && n > best_cov) best_cov = n, best_tau = a.uncertainty;
    }
    const OperatingPoint p{task, Criterion::RiskAtMost, r};
    if (best_cov < 0) {
      EXPECT_THROW(resolve_tau(o, p), UnsatisfiableError);
    } else {
      EXPECT_EQ(resolve_tau(o, p), best_tau);
    }
  }
}

TEST(OperatingPoint, UnsatisfiableRisk) {
  const auto o = outcome_of({{0.1, false, false}, {0.2, true, false}});
  EXPECT_THROW(resolve_tau(o, {Task::SelectiveClassification, Criterion::RiskAtMost, 5.0}), UnsatisfiableError);
}

TEST(OperatingPoint, CoverageQuantisation) {
  std::mt19937 gen(19);
  for (int trial = 0; trial < 50; ++trial) {
    const auto o = random_outcome(gen, 7 + trial * 11, 0.0, 1.0, false);
    const double n = static_cast<double>(o.size());
    for (const double c : {1.0, 5.0, 33.3, 50.0, 80.0, 95.0, 99.9}) {
      const double tau = resolve_tau(o, {Task::SelectiveClassification, Criterion::CoverageExactly, c});
      const double realized = 100.0 * coverage_at(o, Task::SelectiveClassification, CoverageBase::IdOnly, tau);
      EXPECT_GE(realized, c - 1e-9);
      EXPECT_LE(realized, c + 100.0 / n + 1e-9);
    }
  }
}

TEST(OperatingPoint, TprQuantisation) {
  std::mt19937 gen(20);
  for (int trial = 0; trial < 30; ++trial) {
    const auto o = random_outcome(gen, 50 + trial * 17, 0.5, 1.0, false);
    const auto [id, ood] = split_by_domain(o);
    const double tau = resolve_tau(o, {Task::OodDetection, Criterion::TprExactly, 95.0});
    const double tpr = 100.0 * static_cast<double>(std::count_if(id.begin(), id.end(), [&](double u) { return u <= tau; })) /
                       static_cast<double>(id.size());
    EXPECT_GE(tpr, 95.0);
    EXPECT_LE(tpr, 95.0 + 100.0 / static_cast<double>(id.size()) + 1e-9);
  }
}

TEST(OperatingPoint, ScodAllSamplesBase) {
  const auto o = outcome_of({{0.1, true, false}, {0.2, false, true}, {0.3, true, false}, {0.4, false, true}});
  EXPECT_DOUBLE_EQ(resolve_tau(o, {Task::Scod, Criterion::CoverageExactly, 50.0, CoverageBase::AllSamples}), 0.2);
  EXPECT_DOUBLE_EQ(resolve_tau(o, {Task::Scod, Criterion::CoverageExactly, 50.0, CoverageBase::IdOnly}), 0.1);
}

TEST(OperatingPoint, ParseAndValidate) {
  const auto p = parse_point(Task::SelectiveClassification, "cov@5");
  EXPECT_EQ(p.criterion, Criterion::RiskAtMost);
  EXPECT_EQ(p.percent, 5.0);
  EXPECT_EQ(point_name(p), "cov@5");
  EXPECT_EQ(parse_point(Task::Scod, "risk@80").criterion, Criterion::CoverageExactly);
  EXPECT_EQ(parse_point(Task::OodDetection, "fpr@95").criterion, Criterion::TprExactly);
  EXPECT_THROW(parse_point(Task::SelectiveClassification, "fpr@95"), ConfigError);
  EXPECT_THROW(parse_point(Task::OodDetection, "cov@5"), ConfigError);
  EXPECT_THROW(parse_point(Task::SelectiveClassification, "cov@0"), ConfigError);
  EXPECT_THROW(parse_point(Task::SelectiveClassification, "cov@100"), ConfigError);
  EXPECT_THROW(parse_point(Task::SelectiveClassification, "cover"), ConfigError);
}
