#include "wincascade/score_table.hpp"

#include "wincascade/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wincascade {

ScoreTable::ScoreTable(std::vector<LogitMatrix> logits, Eigen::VectorXi labels, std::vector<Domain> domain,
                       Eigen::VectorXd stage_cost, Meta meta)
    : logits_(std::move(logits)),
      labels_(std::move(labels)),
      domain_(std::move(domain)),
      stage_cost_(std::move(stage_cost)),
      meta_(std::move(meta)) {
  if (logits_.empty()) throw DataError("score table needs at least one stage");
  const Index n = labels_.size();
  const Index k = logits_.front().cols();
  if (n < 1) throw DataError("score table needs at least one sample");
  if (k < 2) throw DataError("score table needs at least two classes");
  if (static_cast<Index>(domain_.size()) != n) throw DataError("domain vector length differs from label count");
  if (stage_cost_.size() != n_stages()) throw DataError("stage_cost length differs from stage count");
  for (std::size_t m = 0; m < logits_.size(); ++m) {
    if (logits_[m].rows() != n || logits_[m].cols() != k)
      throw DataError("stage " + std::to_string(m) + " logits have shape " + std::to_string(logits_[m].rows()) +
                      "x" + std::to_string(logits_[m].cols()) + ", expected " + std::to_string(n) + "x" +
                      std::to_string(k));
    if (!logits_[m].allFinite()) throw DataError("stage " + std::to_string(m) + " contains non-finite logits");
  }
  for (Index m = 0; m < stage_cost_.size(); ++m) {
    if (!(stage_cost_[m] >= 0.0) || !std::isfinite(stage_cost_[m]))
      throw DataError("stage_cost[" + std::to_string(m) + "] must be finite and >= 0");
  }
  for (Index i = 0; i < n; ++i) {
    const int y = labels_[i];
    if (is_ood(i)) {
      if (y != kOodLabel) throw DataError("OOD sample " + std::to_string(i) + " must have label -1");
    } else if (y < 0 || y >= k) {
      throw DataError("ID sample " + std::to_string(i) + " has label " + std::to_string(y) + " outside [0, " +
                      std::to_string(k) + ")");
    }
  }
}

Index ScoreTable::count(Domain d) const { return std::count(domain_.begin(), domain_.end(), d); }

ScoreTable ScoreTable::select(std::span<const Index> rows) const {
  const auto n = static_cast<Index>(rows.size());
  for (const Index r : rows)
    if (r < 0 || r >= n_samples()) throw DataError("row index out of range in select");
  std::vector<LogitMatrix> logits;
  logits.reserve(logits_.size());
  for (const auto& s : logits_) {
    LogitMatrix out(n, s.cols());
    for (Index i = 0; i < n; ++i) out.row(i) = s.row(rows[static_cast<std::size_t>(i)]);
    logits.push_back(std::move(out));
  }
  Eigen::VectorXi labels(n);
  std::vector<Domain> domain(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    labels[i] = labels_[r];
    domain[static_cast<std::size_t>(i)] = domain_[static_cast<std::size_t>(r)];
  }
  return ScoreTable(std::move(logits), std::move(labels), std::move(domain), stage_cost_, meta_);
}

ScoreTable ScoreTable::filter(Domain d) const {
  std::vector<Index> rows;
  for (Index i = 0; i < n_samples(); ++i)
    if (domain_[static_cast<std::size_t>(i)] == d) rows.push_back(i);
  return select(rows);
}

ScoreTable ScoreTable::first_stages(Index count) const {
  if (count < 1 || count > n_stages()) throw ConfigError("stage count out of range");
  std::vector<LogitMatrix> logits(logits_.begin(), logits_.begin() + count);
  return ScoreTable(std::move(logits), labels_, domain_, stage_cost_.head(count), meta_);
}

ScoreTable ScoreTable::with_meta(Meta meta) const {
  return ScoreTable(logits_, labels_, domain_, stage_cost_, std::move(meta));
}

ScoreTable ScoreTable::with_stage_cost(Eigen::VectorXd stage_cost) const {
  return ScoreTable(logits_, labels_, domain_, std::move(stage_cost), meta_);
}

bool operator==(const ScoreTable& a, const ScoreTable& b) {
  if (a.n_samples() != b.n_samples() || a.n_classes() != b.n_classes() || a.n_stages() != b.n_stages())
    return false;
  if (a.labels_ != b.labels_ || a.domain_ != b.domain_ || a.stage_cost_ != b.stage_cost_) return false;
  for (std::size_t m = 0; m < a.logits_.size(); ++m)
    if (a.logits_[m] != b.logits_[m]) return false;
  return true;
}

ScoreTable concatenate(const ScoreTable& a, const ScoreTable& b) {
  if (a.n_classes() != b.n_classes()) throw DataError("cannot concatenate tables with different class counts");
  if (a.n_stages() != b.n_stages()) throw DataError("cannot concatenate tables with different stage counts");
  if (a.stage_cost() != b.stage_cost()) throw DataError("cannot concatenate tables with different stage costs");
  const Index n = a.n_samples() + b.n_samples();
  std::vector<LogitMatrix> logits;
  for (Index m = 0; m < a.n_stages(); ++m) {
    LogitMatrix s(n, a.n_classes());
    s << a.stage(m), b.stage(m);
    logits.push_back(std::move(s));
  }
  Eigen::VectorXi labels(n);
  labels << a.labels(), b.labels();
  std::vector<Domain> domain = a.domain();
  domain.insert(domain.end(), b.domain().begin(), b.domain().end());
  return ScoreTable(std::move(logits), std::move(labels), std::move(domain), a.stage_cost(), a.meta());
}

}  // namespace wincascade
