#include "wincascade/report.hpp"

#include "wincascade/error.hpp"
#include "wincascade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace wincascade {

namespace {

double id_accuracy(const EvalOutcome& outcome, double tau) {
  Index total = 0;
  Index correct = 0;
  for (Index i = 0; i < outcome.size(); ++i) {
    if (outcome.is_ood(i) || !(outcome.uncertainty[i] <= tau)) continue;
    ++total;
    correct += outcome.correct(i) ? 1 : 0;
  }
  return total == 0 ? std::numeric_limits<double>::quiet_NaN()
                    : static_cast<double>(correct) / static_cast<double>(total);
}

/// Threshold the metric of `point` is read at on this evaluation set.
double eval_tau(const EvalOutcome& outcome, const OperatingPoint& point) {
  try {
    return resolve_tau(outcome, point);
  } catch (const UnsatisfiableError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void MetricsReport::append(const MetricsReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

MetricsReport report(const CascadeTrace& trace, const ScoreTable& table, std::span<const OperatingPoint> points,
                     double beta, const std::string& label, const std::string& params) {
  if (trace.n_samples() != table.n_samples())
    throw DataError("trace has " + std::to_string(trace.n_samples()) + " samples, table has " +
                    std::to_string(table.n_samples()));
  const auto outcome = make_outcome(table, trace, beta);
  MetricsRow base;
  base.policy = label;
  base.params = params;
  base.avg_cost = trace.avg_cost;
  base.exit_fraction = trace.exit_fractions(table.n_stages());
  base.accuracy_all = id_accuracy(outcome, std::numeric_limits<double>::infinity());

  MetricsReport out;
  std::set<Task> threshold_free_done;
  for (const auto& point : points) {
    MetricsRow row = base;
    row.task = point.task;
    row.metric = point_name(point);
    row.value = metric_value(outcome, point);
    row.accuracy_accepted = id_accuracy(outcome, eval_tau(outcome, point));
    out.rows.push_back(row);

    if (point.tau) {
      const double tau = *point.tau;
      MetricsRow first = base;
      MetricsRow second = base;
      first.task = second.task = point.task;
      first.accuracy_accepted = second.accuracy_accepted = id_accuracy(outcome, tau);
      if (point.task == Task::OodDetection) {
        const auto [id, ood] = split_by_domain(outcome);
        auto accepted = [tau](const std::vector<double>& v) {
          if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
          return 100.0 * static_cast<double>(std::count_if(v.begin(), v.end(), [tau](double u) { return u <= tau; })) /
                 static_cast<double>(v.size());
        };
        first.metric = "fpr@tau";
        first.value = accepted(ood);
        second.metric = "tpr@tau";
        second.value = accepted(id);
      } else {
        first.metric = "risk@tau";
        first.value = 100.0 * selective_risk(outcome, point.task, tau);
        second.metric = "coverage@tau";
        second.value = 100.0 * coverage_at(outcome, point.task, point.coverage_base, tau);
      }
      out.rows.push_back(first);
      out.rows.push_back(second);
    }

    if (threshold_free_done.insert(point.task).second) {
      MetricsRow free = base;
      free.task = point.task;
      free.accuracy_accepted = base.accuracy_all;
      if (point.task == Task::OodDetection) {
        const auto [id, ood] = split_by_domain(outcome);
        free.metric = "auroc";
        free.value = auroc(id, ood);
      } else {
        free.metric = "aurc";
        free.value = aurc(rc_curve(outcome, point.task));
      }
      out.rows.push_back(free);
    }
  }
  return out;
}

void MetricsReport::write_csv(std::ostream& out, const std::vector<std::string>& header_comment) const {
  for (const auto& line : header_comment) out << "# " << line << '\n';
  std::size_t stages = 0;
  for (const auto& r : rows) stages = std::max(stages, r.exit_fraction.size());
  out << "policy,params,task,metric,value,avg_cost,accuracy_all,accuracy_accepted";
  for (std::size_t m = 0; m < stages; ++m) out << ",exit_frac_" << (m + 1);
  out << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    out << csv_field(r.policy) << ',' << csv_field(r.params) << ',' << to_string(r.task) << ',' << r.metric << ','
        << r.value << ',' << r.avg_cost << ',' << r.accuracy_all << ',' << r.accuracy_accepted;
    for (std::size_t m = 0; m < stages; ++m) {
      out << ',';
      if (m < r.exit_fraction.size()) out << r.exit_fraction[m];
    }
    out << '\n';
  }
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(12) << "policy" << std::setw(6) << "task" << std::setw(14) << "metric" << std::right
     << std::setw(10) << "value" << std::setw(12) << "avg_cost" << std::setw(9) << "acc%" << std::setw(10)
     << "acc_acc%" << "  exits%\n";
  os << std::fixed;
  for (const auto& r : rows) {
    const bool fraction = r.metric == "aurc" || r.metric == "auroc";
    os << std::left << std::setw(12) << r.policy << std::setw(6) << to_string(r.task) << std::setw(14) << r.metric
       << std::right << std::setw(10) << std::setprecision(fraction ? 4 : 1) << r.value << std::setw(12)
       << std::setprecision(3) << r.avg_cost << std::setw(9) << std::setprecision(1) << 100.0 * r.accuracy_all
       << std::setw(10) << 100.0 * r.accuracy_accepted << "  ";
    for (std::size_t m = 0; m < r.exit_fraction.size(); ++m) os << (m ? "/" : "") << 100.0 * r.exit_fraction[m];
    os << '\n';
  }
  return os.str();
}

}  // namespace wincascade
