#include "commands.hpp"

#include "wincascade/calibrate.hpp"
#include "wincascade/cascade.hpp"
#include "wincascade/error.hpp"
#include "wincascade/metrics.hpp"
#include "wincascade/policy_file.hpp"
#include "wincascade/report.hpp"
#include "wincascade/score_table.hpp"
#include "wincascade/sweep.hpp"
#include "wincascade/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace wincascade::cli {

namespace fs = std::filesystem;

namespace {

struct TaskOptions {
  std::string task = "sc";
  std::string method;
  std::string combine;
  std::string point;
  std::string coverage_base = "id";
  std::vector<std::string> windows{"10"};
  std::string window_base = "id";
  double beta = 1.0;
};

void add_task_options(CLI::App& cmd, TaskOptions& o) {
  cmd.add_option("--task", o.task, "Uncertainty task")->check(CLI::IsMember({"sc", "ood", "scod"}));
  cmd.add_option("--method", o.method, "Uncertainty score (default: msp for sc/scod, energy for ood)")
      ->check(CLI::IsMember({"msp", "energy"}));
  cmd.add_option("--combine", o.combine, "Ensemble combination (default: pred for sc/scod, member for ood)")
      ->check(CLI::IsMember({"pred", "member"}));
  cmd.add_option("--point", o.point, "Operating point cov@R, risk@C or fpr@P (default: cov@5, fpr@95, risk@80)");
  cmd.add_option("--coverage-base", o.coverage_base, "Coverage population for risk@C")
      ->check(CLI::IsMember({"id", "all"}));
  cmd.add_option("--window", o.windows, "Window half-width per exit in percentiles, e.g. 10 or ±10")
      ->delimiter(',');
  cmd.add_option("--window-base", o.window_base, "Percentile base of the windows at deployment")
      ->check(CLI::IsMember({"id", "mix-offline", "mix-stream"}));
  cmd.add_option("--beta", o.beta, "SCOD cost of accepting an OOD sample")->check(CLI::NonNegativeNumber);
}

double parse_width(std::string text) {
  for (const std::string prefix : {"±", "+-", "+"}) {
    if (text.rfind(prefix, 0) == 0) {
      text = text.substr(prefix.size());
      break;
    }
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad window half-width '" + text + "'");
  }
}

CalibrationConfig make_config(const TaskOptions& o) {
  const Task task = parse_task(o.task);
  CalibrationConfig config;
  config.method = default_method(task);
  if (!o.method.empty()) config.method.kind = parse_score_kind(o.method);
  if (!o.combine.empty()) config.method.combine = parse_combine(o.combine);
  validate(config.method);
  std::string point = o.point;
  if (point.empty()) point = task == Task::SelectiveClassification ? "cov@5" : task == Task::OodDetection ? "fpr@95" : "risk@80";
  config.point = parse_point(task, point, parse_coverage_base(o.coverage_base));
  for (const auto& w : o.windows) config.half_widths.push_back(parse_width(w));
  config.beta = o.beta;
  config.window_base = parse_window_base(o.window_base);
  return config;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

/// Provenance lines for CSV headers: the full command line and its CRC-32.
std::vector<std::string> provenance(const std::vector<std::string>& args) {
  std::string joined;
  for (std::size_t i = 1; i < args.size(); ++i) joined += (i > 1 ? " " : "") + args[i];
  const auto crc = crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size()));
  return {"wincascade " + joined, "config_hash=" + hex32(crc)};
}

/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

ScoreTable load_table(const fs::path& path, const std::vector<double>& costs) {
  if (!fs::exists(path)) throw DataError("no such file: " + path.string());
  auto table = read_table(path);
  if (!costs.empty()) {
    if (static_cast<Index>(costs.size()) != table.n_stages())
      throw ConfigError("--costs lists " + std::to_string(costs.size()) + " values for " +
                        std::to_string(table.n_stages()) + " stages");
    table = table.with_stage_cost(Eigen::Map<const Eigen::VectorXd>(costs.data(), table.n_stages()));
  }
  return table;
}

// --------------------------------------------------------------------------

struct SynthOptions {
  SynthSpec spec;
  std::string out;
  double val_fraction = 0.5;
  bool no_split = false;
  std::string format = "uqc";
};

void cmd_synth(const SynthOptions& o) {
  const auto table = generate(o.spec);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const std::string ext = o.format == "csv" ? ".csv" : ".uqc";
  auto save = [&](const ScoreTable& t, const std::string& stem) {
    const auto path = dir / (stem + ext);
    write_atomic(path, [&](std::ostream& out) {
      if (o.format == "csv") {
        write_csv(t, out);
      } else {
        const auto bytes = encode_binary(t);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      }
    });
    std::cout << "wrote " << path.string() << " (" << t.n_samples() << " samples, " << t.n_stages() << " stages, "
              << t.n_classes() << " classes)\n";
  };
  if (o.no_split) {
    save(table, "table");
    return;
  }
  const auto [val, test] = split(table, o.val_fraction, 1.0 - o.val_fraction, o.spec.seed);
  save(val, "val");
  save(test, "test");
}

// --------------------------------------------------------------------------

struct CalibrateOptions {
  TaskOptions task;
  std::string val;
  std::string policy;
  std::string out;
  std::vector<double> costs;
};

fs::path policy_destination(const std::string& policy, const std::string& out) {
  if (!policy.empty()) return policy;
  if (!out.empty()) return fs::path(out) / "policy.txt";
  throw ConfigError("give --policy FILE or --out DIR for the policy file");
}

void cmd_calibrate(const CalibrateOptions& o) {
  const auto config = make_config(o.task);
  const auto val = load_table(o.val, o.costs);
  const auto cal = calibrate(val, config);
  const auto dest = policy_destination(o.policy, o.out);
  write_atomic(dest, [&](std::ostream& out) { write_policy(cal.policy, out); });
  std::cout << "wrote " << dest.string() << ": " << point_name(cal.policy.point) << " on "
            << val.count(Domain::InDistribution) << " ID validation samples, final tau " << cal.policy.final_tau
            << '\n';
}

// --------------------------------------------------------------------------

struct RunOptions {
  std::string policy;
  std::string test;
  std::string out;
  std::string window_base;
  std::optional<double> beta;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::vector<std::string> points;
  std::vector<double> costs;
  bool trace = false;
};

/// SC evaluates on ID rows only unless an explicit mixture is requested.
ScoreTable deployment_table(const RunOptions& o, Task task) {
  auto table = load_table(o.test, o.costs);
  if (!o.alpha) {
    if (task == Task::SelectiveClassification && table.count(Domain::OutOfDistribution) > 0)
      return table.filter(Domain::InDistribution);
    return table;
  }
  const Index n_id = table.count(Domain::InDistribution);
  const Index n_ood = table.count(Domain::OutOfDistribution);
  if (n_id == 0 || n_ood == 0) throw DataError("--alpha needs both ID and OOD samples in " + o.test);
  auto mixed = mix_subsample(table.filter(Domain::InDistribution), table.filter(Domain::OutOfDistribution),
                             {*o.alpha, o.seed});
  if (const auto it = mixed.meta().find("mixture_note"); it != mixed.meta().end())
    std::cerr << "warning: " << it->second << '\n';
  return mixed;
}

CalibratedPolicy load_policy(const RunOptions& o) {
  if (!fs::exists(o.policy)) throw ConfigError("no such policy file: " + o.policy);
  auto policy = read_policy(fs::path(o.policy));
  if (!o.window_base.empty()) policy.window_base = parse_window_base(o.window_base);
  if (o.beta) policy.beta = *o.beta;
  return policy;
}

void check_stages(const ScoreTable& table, const CalibratedPolicy& policy) {
  if (table.n_stages() != policy.n_stages())
    throw DataError("policy expects " + std::to_string(policy.n_stages()) + " stages, table has " +
                    std::to_string(table.n_stages()));
}

std::string policy_params(const CalibratedPolicy& policy) {
  std::ostringstream os;
  os << "window=";
  for (std::size_t e = 0; e < policy.half_widths.size(); ++e) os << (e ? "/" : "") << "±" << policy.half_widths[e];
  os << ";base=" << to_string(policy.window_base) << ";method=" << to_string(policy.method.kind) << "/"
     << to_string(policy.method.combine);
  return os.str();
}

std::vector<OperatingPoint> report_points(const RunOptions& o, const CalibratedPolicy& policy) {
  std::vector<OperatingPoint> points{policy.point};
  for (const auto& p : o.points) points.push_back(parse_point(policy.point.task, p, policy.point.coverage_base));
  return points;
}

void cmd_run(const RunOptions& o, const std::vector<std::string>& args) {
  const auto policy = load_policy(o);
  const auto test = deployment_table(o, policy.point.task);
  check_stages(test, policy);
  const auto prefixes = evaluate_all_prefixes(test, policy.method);
  const auto trace = run_deployed(prefixes, test.stage_cost(), policy);
  const auto points = report_points(o, policy);
  const auto metrics = report(trace, test, points, policy.beta, "cascade", policy_params(policy));
  const fs::path dir(o.out);
  write_atomic(dir / "metrics.csv", [&](std::ostream& out) { metrics.write_csv(out, provenance(args)); });
  std::cout << "wrote " << (dir / "metrics.csv").string() << '\n';
  if (o.trace) {
    write_atomic(dir / "trace.csv", [&](std::ostream& out) {
      for (const auto& line : provenance(args)) out << "# " << line << '\n';
      out << "sample_id,exit_stage,uncertainty,prediction,accepted\n";
      out.precision(17);
      for (Index i = 0; i < trace.n_samples(); ++i)
        out << i << ',' << trace.exit_stage[i] << ',' << trace.final_uncertainty[i] << ','
            << trace.final_prediction[i] << ',' << (trace.final_uncertainty[i] <= policy.final_tau ? 1 : 0) << '\n';
    });
    std::cout << "wrote " << (dir / "trace.csv").string() << '\n';
  }
}

// --------------------------------------------------------------------------

struct SweepOptions {
  TaskOptions task;
  std::string val;
  std::string test;
  std::string out;
  std::vector<double> widths{0, 1, 2, 3, 5, 7.5, 10, 15, 20, 30, 40, 50};
  Index exit = 1;
  bool compare = false;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::vector<double> costs;
};

void cmd_sweep(const SweepOptions& o, const std::vector<std::string>& args) {
  auto config = make_config(o.task);
  const auto val = load_table(o.val, o.costs);
  RunOptions run_opts;
  run_opts.test = o.test;
  run_opts.alpha = o.alpha;
  run_opts.seed = o.seed;
  run_opts.costs = o.costs;
  const auto test = deployment_table(run_opts, config.point.task);
  if (val.n_stages() < 2) throw DataError("sweeps need at least two stages");
  if (o.exit < 1 || o.exit >= val.n_stages()) throw ConfigError("--exit must name a non-final stage");
  const auto cal = calibrate(val, config);
  check_stages(test, cal.policy);
  const auto prefixes = evaluate_all_prefixes(test, config.method);
  const auto base = cal.policy.cascade_policy();
  const Index exit = o.exit - 1;
  const auto point = config.point;
  const std::string metric = point_name(point);

  struct Row {
    std::string kind;
    double param;
    const CascadeTrace* trace;
  };
  const auto window_traces = sweep_policy(prefixes, test.stage_cost(), base, cal.calibrator, o.widths, exit);
  std::vector<double> pass;
  for (const double w : o.widths) pass.push_back(std::min(100.0, 2.0 * w));
  std::vector<CascadeTrace> single_traces;
  if (o.compare) single_traces = sweep_single_threshold(prefixes, test.stage_cost(), base, cal.calibrator, pass, exit);
  std::vector<CascadeTrace> prefix_traces;
  for (Index l = 1; l <= test.n_stages(); ++l)
    prefix_traces.push_back(fixed_exit_trace(prefixes, test.stage_cost(), l));

  std::vector<Row> rows;
  for (std::size_t i = 0; i < window_traces.size(); ++i) rows.push_back({"window", o.widths[i], &window_traces[i]});
  for (std::size_t i = 0; i < single_traces.size(); ++i) rows.push_back({"single", pass[i], &single_traces[i]});
  for (std::size_t l = 0; l < prefix_traces.size(); ++l)
    rows.push_back({"prefix", static_cast<double>(l + 1), &prefix_traces[l]});

  const fs::path path = fs::path(o.out) / "curve.csv";
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& line : provenance(args)) out << "# " << line << '\n';
    out << "kind,param,avg_cost,pass_fraction,metric,value\n";
    out.precision(17);
    for (const auto& r : rows) {
      const auto outcome = make_outcome(test, *r.trace, config.beta);
      Index beyond = 0;
      for (Index i = 0; i < r.trace->n_samples(); ++i) beyond += r.trace->exit_stage[i] > exit + 1 ? 1 : 0;
      out << r.kind << ',' << r.param << ',' << r.trace->avg_cost << ','
          << static_cast<double>(beyond) / static_cast<double>(r.trace->n_samples()) << ',' << metric << ','
          << metric_value(outcome, point) << '\n';
    }
  });
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
}

// --------------------------------------------------------------------------

void cmd_report(const RunOptions& o, const std::vector<std::string>& args) {
  const auto policy = load_policy(o);
  const auto test = deployment_table(o, policy.point.task);
  check_stages(test, policy);
  const auto prefixes = evaluate_all_prefixes(test, policy.method);
  const auto points = report_points(o, policy);
  std::vector<OperatingPoint> untargeted = points;
  for (auto& p : untargeted) p.tau.reset();

  MetricsReport all;
  all.append(report(run_deployed(prefixes, test.stage_cost(), policy), test, points, policy.beta, "cascade",
                    policy_params(policy)));
  all.append(report(fixed_exit_trace(prefixes, test.stage_cost(), 1), test, untargeted, policy.beta, "stage-1"));
  all.append(report(fixed_exit_trace(prefixes, test.stage_cost(), test.n_stages()), test, untargeted, policy.beta,
                    "ensemble"));
  std::cout << all.to_text();
  if (!o.out.empty()) {
    const auto path = fs::path(o.out) / "report.csv";
    write_atomic(path, [&](std::ostream& out) { all.write_csv(out, provenance(args)); });
    std::cout << "wrote " << path.string() << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Window-based early-exit cascade evaluation"};
  app.require_subcommand(1);

  SynthOptions synth_o;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark as UQC1 (or CSV) tables");
  synth->add_option("--out", synth_o.out, "Output directory")->required();
  synth->add_option("--classes", synth_o.spec.n_classes, "Number of classes K");
  synth->add_option("--n-id", synth_o.spec.n_id, "ID samples");
  synth->add_option("--n-ood", synth_o.spec.n_ood, "OOD samples");
  synth->add_option("--signal", synth_o.spec.signal, "Per-stage signal strengths (strictly increasing)")
      ->delimiter(',');
  synth->add_option("--sigma", synth_o.spec.noise_sigma, "Logit noise scale");
  synth->add_option("--rho", synth_o.spec.stage_correlation, "Noise correlation between stages");
  synth->add_option("--ood-shift", synth_o.spec.ood_shift, "Shift added to every OOD logit");
  synth->add_option("--ood-scale", synth_o.spec.ood_noise_scale, "OOD noise scale multiplier");
  synth->add_option("--costs", synth_o.spec.stage_cost, "Per-stage cost")->delimiter(',');
  synth->add_option("--seed", synth_o.spec.seed, "Random seed");
  synth->add_option("--val-fraction", synth_o.val_fraction, "Validation share of the split")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--no-split", synth_o.no_split, "Write a single table.uqc instead of val/test");
  synth->add_option("--format", synth_o.format, "Output format")->check(CLI::IsMember({"uqc", "csv"}));

  CalibrateOptions cal_o;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Resolve thresholds and windows on a validation table");
  calibrate_cmd->add_option("--val", cal_o.val, "Validation table (UQC1 or CSV)")->required();
  calibrate_cmd->add_option("--policy", cal_o.policy, "Policy file to write");
  calibrate_cmd->add_option("--out", cal_o.out, "Directory for policy.txt when --policy is not given");
  calibrate_cmd->add_option("--costs", cal_o.costs, "Override per-stage costs")->delimiter(',');
  add_task_options(*calibrate_cmd, cal_o.task);

  RunOptions run_o;
  auto add_run_options = [](CLI::App& cmd, RunOptions& o, bool out_required) {
    cmd.add_option("--policy", o.policy, "Policy file from calibrate")->required();
    cmd.add_option("--test", o.test, "Evaluation table (UQC1 or CSV)")->required();
    auto* out = cmd.add_option("--out", o.out, "Output directory");
    if (out_required) out->required();
    cmd.add_option("--window-base", o.window_base, "Override the policy's window base")
        ->check(CLI::IsMember({"id", "mix-offline", "mix-stream"}));
    cmd.add_option("--beta", o.beta, "Override the policy's SCOD beta")->check(CLI::NonNegativeNumber);
    cmd.add_option("--alpha", o.alpha, "Subsample the table to this ID fraction")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--seed", o.seed, "Mixture subsampling seed");
    cmd.add_option("--point", o.points, "Extra operating points to report")->delimiter(',');
    cmd.add_option("--costs", o.costs, "Override per-stage costs")->delimiter(',');
  };
  auto* run_cmd = app.add_subcommand("run", "Run a calibrated cascade and write metrics.csv");
  add_run_options(*run_cmd, run_o, true);
  run_cmd->add_flag("--trace", run_o.trace, "Also write the per-sample trace.csv");

  SweepOptions sweep_o;
  auto* sweep = app.add_subcommand("sweep", "Cost/metric curve over window widths");
  sweep->add_option("--val", sweep_o.val, "Validation table")->required();
  sweep->add_option("--test", sweep_o.test, "Evaluation table")->required();
  sweep->add_option("--out", sweep_o.out, "Output directory")->required();
  sweep->add_option("--widths", sweep_o.widths, "Half-widths to sweep (percentiles)")->delimiter(',');
  sweep->add_option("--exit", sweep_o.exit, "Exit whose window is swept (1-based)");
  sweep->add_flag("--compare", sweep_o.compare, "Also sweep the single-threshold policy");
  sweep->add_option("--alpha", sweep_o.alpha, "Subsample the test table to this ID fraction")
      ->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--seed", sweep_o.seed, "Mixture subsampling seed");
  sweep->add_option("--costs", sweep_o.costs, "Override per-stage costs")->delimiter(',');
  add_task_options(*sweep, sweep_o.task);

  RunOptions report_o;
  auto* report_cmd = app.add_subcommand("report", "Print cascade vs stage-1 vs ensemble metrics");
  add_run_options(*report_cmd, report_o, false);

  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 wants reversed args without argv[0]
    app.parse(rest);
    if (synth->parsed()) cmd_synth(synth_o);
    if (calibrate_cmd->parsed()) cmd_calibrate(cal_o);
    if (run_cmd->parsed()) cmd_run(run_o, args);
    if (sweep->parsed()) cmd_sweep(sweep_o, args);
    if (report_cmd->parsed()) cmd_report(report_o, args);
    return kOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const UnsatisfiableError& e) {
    std::cerr << "unsatisfiable: " << e.what() << '\n';
    return kUnsatisfiable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace wincascade::cli
