#include "oracles.hpp"
#include "wincascade/error.hpp"
#include "wincascade/uncertainty.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace wincascade;
namespace wt = wincascade::testing;

namespace {

ScoreTable two_class_table(std::vector<std::array<float, 2>> stages) {
  std::vector<LogitMatrix> logits;
  for (const auto& s : stages) {
    LogitMatrix m(1, 2);
    m << s[0], s[1];
    logits.push_back(m);
  }
  return ScoreTable(std::move(logits), Eigen::VectorXi::Zero(1), {Domain::InDistribution},
                    Eigen::VectorXd::Ones(static_cast<Index>(stages.size())));
}

}  // namespace

TEST(Softmax, Examples) {
  const Eigen::Vector2d half = softmax(Eigen::Vector2d(0, 0));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  const Eigen::Vector2d p = softmax(Eigen::Vector2d(std::log(1.0), std::log(3.0)));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  const Eigen::Vector2d big = softmax(Eigen::Vector2d(1000, 0));
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, MatchesNaiveOracleAndSumsToOne) {
  std::mt19937 gen(3);
  std::normal_distribution<double> d(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd v(7);
    std::vector<long double> lv;
    for (int i = 0; i < 7; ++i) lv.push_back(v[i] = d(gen));
    const Eigen::VectorXd p = softmax(v);
    const auto q = wt::naive_softmax(lv);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(p[i], static_cast<double>(q[i]), 1e-14);
  }
}

TEST(NegMsp, Examples) {
  EXPECT_DOUBLE_EQ(neg_msp(Eigen::VectorXd::Constant(10, 0.1)), -0.1);
  EXPECT_DOUBLE_EQ(neg_msp(Eigen::Vector3d(0.7, 0.2, 0.1)), -0.7);
  EXPECT_DOUBLE_EQ(neg_msp(Eigen::Vector3d(0, 1, 0)), -1.0);
}

TEST(Energy, Examples) {
  EXPECT_NEAR(energy(Eigen::Vector4d::Zero()), -std::log(4.0), 1e-15);
  EXPECT_NEAR(energy(Eigen::Vector2d(1000, 1000)), -(1000 + std::log(2.0)), 1e-12);
  const double oracle = -std::log(1 + std::exp(1.0) + std::exp(2.0));
  EXPECT_NEAR(energy(Eigen::Vector3d(0, 1, 2)), oracle, 1e-14);
  EXPECT_NEAR(oracle, -2.4076, 1e-4);
}

TEST(Energy, ShiftMovesEnergyByMinusC) {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> d(-4, 4);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v(5);
    for (auto& x : v) x = d(gen);
    const double c = d(gen);
    EXPECT_NEAR(energy(Eigen::VectorXd(v.array() + c)), energy(v) - c, 1e-12);
    const Eigen::VectorXd p = softmax(v), q = softmax(Eigen::VectorXd(v.array() + c));
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(argmax(v), argmax(Eigen::VectorXd(v.array() + c)));
  }
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(Eigen::Vector4d(1, 3, 3, 2)), 1);
  EXPECT_EQ(argmax(Eigen::Vector3d(0, 0, 0)), 0);
}

TEST(Method, DefaultsAndCompatibility) {
  EXPECT_EQ(default_method(Task::SelectiveClassification), (ScoreMethod{ScoreKind::NegMsp, Combine::PredictiveDistribution}));
  EXPECT_EQ(default_method(Task::Scod), (ScoreMethod{ScoreKind::NegMsp, Combine::PredictiveDistribution}));
  EXPECT_EQ(default_method(Task::OodDetection), (ScoreMethod{ScoreKind::Energy, Combine::MemberMean}));
  EXPECT_THROW(validate(ScoreMethod{ScoreKind::Energy, Combine::PredictiveDistribution}), ConfigError);
  EXPECT_NO_THROW(validate(ScoreMethod{ScoreKind::NegMsp, Combine::MemberMean}));
}

TEST(Prefix, PredictiveVersusMemberMean) {
  const float l3 = std::log(3.0f);
  const auto same = two_class_table({{0, 0}, {0, l3}});
  const ScoreMethod pred{ScoreKind::NegMsp, Combine::PredictiveDistribution};
  const ScoreMethod member{ScoreKind::NegMsp, Combine::MemberMean};
  EXPECT_NEAR(prefix_evaluate(same, pred, 2).uncertainty[0], -0.625, 1e-7);
  EXPECT_NEAR(prefix_evaluate(same, member, 2).uncertainty[0], -0.625, 1e-7);
  const auto opposite = two_class_table({{l3, 0}, {0, l3}});
  EXPECT_NEAR(prefix_evaluate(opposite, pred, 2).uncertainty[0], -0.5, 1e-7);
  EXPECT_NEAR(prefix_evaluate(opposite, member, 2).uncertainty[0], -0.75, 1e-7);
  EXPECT_EQ(prefix_evaluate(opposite, pred, 2).prediction[0], 0);  // exact tie in the mean
}

TEST(Prefix, LengthOneIsStageOne) {
  const auto t = wt::random_table(5, {.n = 50, .k = 5, .m = 3});
  for (const auto method : {ScoreMethod{ScoreKind::NegMsp, Combine::PredictiveDistribution},
                            ScoreMethod{ScoreKind::Energy, Combine::MemberMean}}) {
    const auto out = prefix_evaluate(t, method, 1);
    for (Index i = 0; i < t.n_samples(); ++i) {
      const Eigen::VectorXd v = t.stage(0).row(i).cast<double>().transpose();
      const double u = method.kind == ScoreKind::NegMsp ? neg_msp(softmax(v)) : energy(v);
      EXPECT_EQ(out.uncertainty[i], u);
      EXPECT_EQ(out.prediction[i], argmax(v));
    }
  }
}

TEST(Prefix, MatchesLongDoubleOracle) {
  const auto t = wt::random_table(6, {.n = 80, .k = 4, .m = 3});
  for (Index l = 1; l <= 3; ++l) {
    const auto pred = prefix_evaluate(t, {ScoreKind::NegMsp, Combine::PredictiveDistribution}, l);
    const auto msp_member = prefix_evaluate(t, {ScoreKind::NegMsp, Combine::MemberMean}, l);
    const auto en_member = prefix_evaluate(t, {ScoreKind::Energy, Combine::MemberMean}, l);
    for (Index i = 0; i < t.n_samples(); ++i) {
      std::vector<long double> mean(4, 0);
      long double msp_sum = 0, en_sum = 0;
      for (Index m = 0; m < l; ++m) {
        std::vector<long double> v;
        for (Index k = 0; k < 4; ++k) v.push_back(t.stage(m)(i, k));
        const auto p = wt::naive_softmax(v);
        for (int k = 0; k < 4; ++k) mean[k] += p[k] / l;
        msp_sum += -*std::max_element(p.begin(), p.end());
        long double s = 0;
        for (auto x : v) s += std::exp(x);
        en_sum += -std::log(s);
      }
      const auto best = std::max_element(mean.begin(), mean.end());
      EXPECT_NEAR(pred.uncertainty[i], static_cast<double>(-*best), 1e-12);
      EXPECT_NEAR(std::accumulate(mean.begin(), mean.end(), 0.0L), 1.0L, 1e-12L);
      EXPECT_NEAR(msp_member.uncertainty[i], static_cast<double>(msp_sum / l), 1e-12);
      EXPECT_NEAR(en_member.uncertainty[i], static_cast<double>(en_sum / l), 1e-9);
      EXPECT_EQ(pred.prediction[i], best - mean.begin());
    }
  }
}

TEST(Prefix, CopiedStagesEqualSingleModel) {
  const auto base = wt::random_table(7, {.n = 60, .k = 6, .m = 1});
  const ScoreTable copies({base.stage(0), base.stage(0), base.stage(0)}, base.labels(), base.domain(),
                          Eigen::VectorXd::Ones(3));
  for (const auto method : {ScoreMethod{ScoreKind::NegMsp, Combine::PredictiveDistribution},
                            ScoreMethod{ScoreKind::NegMsp, Combine::MemberMean},
                            ScoreMethod{ScoreKind::Energy, Combine::MemberMean}}) {
    const auto one = prefix_evaluate(base, method, 1);
    const auto three = prefix_evaluate(copies, method, 3);
    EXPECT_EQ(one.prediction, three.prediction);
    EXPECT_LT((one.uncertainty - three.uncertainty).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Prefix, ClassPermutationInvariance) {
  const auto t = wt::random_table(8, {.n = 40, .k = 5, .m = 2});
  const std::array<int, 5> perm{3, 0, 4, 1, 2};  // new column j holds old class perm[j]
  std::vector<LogitMatrix> permuted;
  for (Index m = 0; m < 2; ++m) {
    LogitMatrix p(t.n_samples(), 5);
    for (int j = 0; j < 5; ++j) p.col(j) = t.stage(m).col(perm[j]);
    permuted.push_back(p);
  }
  Eigen::VectorXi labels = t.labels();
  const ScoreTable pt(permuted, labels.setZero(), t.domain(), t.stage_cost());
  const ScoreMethod method{ScoreKind::NegMsp, Combine::PredictiveDistribution};
  const auto a = prefix_evaluate(t, method, 2);
  const auto b = prefix_evaluate(pt, method, 2);
  for (Index i = 0; i < t.n_samples(); ++i) {
    EXPECT_EQ(perm[static_cast<std::size_t>(b.prediction[i])], a.prediction[i]);
    EXPECT_NEAR(a.uncertainty[i], b.uncertainty[i], 1e-15);
  }
}

TEST(Prefix, OutOfRangeRejected) {
  const auto t = wt::random_table(9, {.n = 5, .m = 2});
  EXPECT_THROW(prefix_evaluate(t, {}, 0), ConfigError);
  EXPECT_THROW(prefix_evaluate(t, {}, 3), ConfigError);
}
