#include "oracles.hpp"
#include "wincascade/calibrate.hpp"
#include "wincascade/metrics.hpp"
#include "wincascade/policy_file.hpp"
#include "wincascade/report.hpp"
#include "wincascade/sweep.hpp"
#include "wincascade/synth.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace wincascade;
namespace wt = wincascade::testing;

namespace {

struct Bench {
  ScoreTable val;
  ScoreTable test;
};

Bench bench(std::uint64_t seed, Index stages = 2) {
  SynthSpec s;
  s.n_id = 3000;
  s.n_ood = 1000;
  s.seed = seed;
  if (stages == 3) {
    s.signal = {10.0, 10.5, 11.0};
    s.stage_cost = {1.0, 1.0, 1.0};
  }
  auto [val, test] = split(generate(s), 0.5, 0.5, seed);
  return {val, test};
}

CalibrationConfig sc_config(std::vector<double> widths) {
  return {{Task::SelectiveClassification, Criterion::RiskAtMost, 5.0}, {}, std::move(widths), 1.0,
          WindowBase::ValidationId};
}

}  // namespace

TEST(Sweep, WidthsGiveNonDecreasingCost) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto b = bench(seed);
    const auto cal = calibrate(b.val, sc_config({10.0}));
    const std::vector<double> widths{0, 1, 2, 5, 10, 15, 20, 30, 40, 50, 100};
    const auto traces = sweep_policy(b.test, cal.policy.cascade_policy(), cal.calibrator, widths);
    ASSERT_EQ(traces.size(), widths.size());
    for (std::size_t i = 1; i < traces.size(); ++i) {
      EXPECT_LE(traces[i - 1].avg_cost, traces[i].avg_cost);
      EXPECT_TRUE((traces[i - 1].exit_stage.array() <= traces[i].exit_stage.array()).all());
    }
    const auto prefixes = evaluate_all_prefixes(b.test, cal.policy.method);
    EXPECT_EQ(traces.back().final_uncertainty, prefixes[1].uncertainty);
    EXPECT_EQ(traces.back().final_prediction, prefixes[1].prediction);
  }
}

TEST(Sweep, ZeroWidthBehavesLikeStageOne) {
  const auto b = bench(4);
  const auto cal = calibrate(b.val, sc_config({10.0}));
  const auto trace = sweep_policy(b.test, cal.policy.cascade_policy(), cal.calibrator, std::vector{0.0}).front();
  const auto prefixes = evaluate_all_prefixes(b.test, cal.policy.method);
  Index differ = 0;
  for (Index i = 0; i < b.test.n_samples(); ++i) differ += trace.final_prediction[i] != prefixes[0].prediction[i];
  const auto passed = (trace.exit_stage.array() == 2).count();
  EXPECT_LE(differ, passed);
  EXPECT_LE(passed, (prefixes[0].uncertainty.array() == cal.policy.exit_taus[0]).count());
}

TEST(Sweep, SingleThresholdPassFraction) {
  const auto b = bench(5);
  const auto cal = calibrate(b.val, sc_config({10.0}));
  const auto prefixes = evaluate_all_prefixes(b.val.filter(Domain::InDistribution), cal.policy.method);
  const auto cost = b.val.stage_cost();
  const auto traces = sweep_single_threshold(prefixes, cost, cal.policy.cascade_policy(), cal.calibrator,
                                             std::vector{0.0, 20.0, 100.0});
  const double n = static_cast<double>(prefixes[0].uncertainty.size());
  EXPECT_EQ((traces[0].exit_stage.array() == 2).count(), 0);
  EXPECT_NEAR((traces[1].exit_stage.array() == 2).count() / n, 0.2, 1.0 / n);
  EXPECT_EQ((traces[2].exit_stage.array() == 2).count(), static_cast<Index>(n));
}

TEST(Sweep, ThreeStageSecondExit) {
  const auto b = bench(6, 3);
  const auto cal = calibrate(b.val, sc_config({10.0, 10.0}));
  const std::vector<double> widths{0, 5, 10, 25, 50, 100};
  const auto traces = sweep_policy(b.test, cal.policy.cascade_policy(), cal.calibrator, widths, 1);
  for (std::size_t i = 1; i < traces.size(); ++i) EXPECT_LE(traces[i - 1].avg_cost, traces[i].avg_cost);
}

TEST(Report, RowsAndExtremes) {
  const auto b = bench(7);
  const auto cal = calibrate(b.val, sc_config({10.0}));
  const auto id = b.test.filter(Domain::InDistribution);
  const auto prefixes = evaluate_all_prefixes(id, cal.policy.method);
  const std::vector<OperatingPoint> points{parse_point(Task::SelectiveClassification, "cov@5"),
                                           parse_point(Task::SelectiveClassification, "risk@80")};
  const auto stage1 = report(fixed_exit_trace(prefixes, id.stage_cost(), 1), id, points, 1.0, "s1");
  const auto nopass = report(run_cascade(prefixes, id.stage_cost(), {{no_pass_window()}, cal.policy.method}), id,
                             points, 1.0, "s1");
  ASSERT_EQ(stage1.rows.size(), 3u);  // two points plus aurc
  EXPECT_EQ(stage1.rows[0].metric, "cov@5");
  EXPECT_EQ(stage1.rows[1].metric, "aurc");
  EXPECT_EQ(stage1.rows[2].metric, "risk@80");
  for (std::size_t r = 0; r < stage1.rows.size(); ++r) {
    EXPECT_EQ(stage1.rows[r].metric, nopass.rows[r].metric);
    EXPECT_EQ(stage1.rows[r].value, nopass.rows[r].value);
    EXPECT_EQ(stage1.rows[r].avg_cost, nopass.rows[r].avg_cost);
  }
  // accuracy over accepted samples at the cov@5 threshold is at least 95%
  EXPECT_GE(stage1.rows[0].accuracy_accepted, 0.95 - 1e-12);
}

TEST(Report, TauRowsAndCsv) {
  const auto b = bench(8);
  const auto cal = calibrate(b.val, sc_config({10.0}));
  const auto id = b.test.filter(Domain::InDistribution);
  const auto trace = run_deployed(id, cal.policy);
  const std::vector<OperatingPoint> points{cal.policy.point};
  const auto rep = report(trace, id, points, 1.0, "cascade", "w=10");
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[1].metric, "risk@tau");
  EXPECT_EQ(rep.rows[3].metric, "aurc");
  EXPECT_EQ(rep.rows[2].metric, "coverage@tau");
  const auto out = make_outcome(id, trace);
  EXPECT_DOUBLE_EQ(rep.rows[1].value, 100 * selective_risk(out, Task::SelectiveClassification, cal.policy.final_tau));
  EXPECT_DOUBLE_EQ(rep.rows[0].value, cov_at_risk(out, Task::SelectiveClassification, 5));
  std::ostringstream csv;
  rep.write_csv(csv, {"hello"});
  const auto text = csv.str();
  EXPECT_EQ(text.rfind("# hello\npolicy,params,task,metric,value,avg_cost,", 0), 0u) << text;
  EXPECT_NE(rep.to_text().find("cov@5"), std::string::npos);
}

TEST(Report, OodRows) {
  const auto b = bench(9);
  const CalibrationConfig cfg{{Task::OodDetection, Criterion::TprExactly, 95.0}, default_method(Task::OodDetection),
                              {10.0}, 1.0, WindowBase::ValidationId};
  const auto cal = calibrate(b.val, cfg);
  const auto prefixes = evaluate_all_prefixes(b.test, cfg.method);
  const auto trace = run_deployed(prefixes, b.test.stage_cost(), cal.policy);
  const std::vector<OperatingPoint> points{cal.policy.point};
  const auto rep = report(trace, b.test, points, 1.0);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[0].metric, "fpr@95");
  EXPECT_EQ(rep.rows[3].metric, "auroc");
  const auto [id, ood] = split_by_domain(make_outcome(b.test, trace));
  EXPECT_NEAR(rep.rows[3].value, wt::auroc_by_pairs(id, ood), 1e-10);
}

TEST(PolicyFile, RoundTrip) {
  const auto b = bench(10, 3);
  auto cfg = sc_config({7.5, 50.0});
  cfg.window_base = WindowBase::MixStream;
  cfg.beta = 0.25;
  const auto cal = calibrate(b.val, cfg);
  std::stringstream s;
  write_policy(cal.policy, s);
  const auto back = read_policy(s);
  EXPECT_EQ(back.method, cal.policy.method);
  EXPECT_EQ(back.exit_taus, cal.policy.exit_taus);
  EXPECT_EQ(back.half_widths, cal.policy.half_widths);
  EXPECT_EQ(back.final_tau, cal.policy.final_tau);
  EXPECT_EQ(back.beta, 0.25);
  EXPECT_EQ(back.window_base, WindowBase::MixStream);
  EXPECT_EQ(point_name(back.point), point_name(cal.policy.point));
  ASSERT_EQ(back.windows.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(back.windows[e].lower, cal.policy.windows[e].lower);
    EXPECT_EQ(back.windows[e].upper, cal.policy.windows[e].upper);
  }
  EXPECT_TRUE(std::isinf(back.windows[1].upper));
}

TEST(PolicyFile, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_policy(in, "p.txt");
  };
  EXPECT_THROW(parse("stages = 2\n"), ConfigError);
  EXPECT_THROW(parse("format = wincascade-policy-1\nstages = 2\ntask = sc\nbogus line\n"), ConfigError);
  EXPECT_THROW(read_policy(std::filesystem::path("/nonexistent/policy.txt")), ConfigError);
}
