#include "wincascade/uncertainty.hpp"

#include "wincascade/error.hpp"

namespace wincascade {

ScoreMethod default_method(Task task) {
  if (task == Task::OodDetection) return {ScoreKind::Energy, Combine::MemberMean};
  return {ScoreKind::NegMsp, Combine::PredictiveDistribution};
}

void validate(const ScoreMethod& method) {
  if (method.kind == ScoreKind::Energy && method.combine == Combine::PredictiveDistribution)
    throw ConfigError("energy score needs member-mean combination (energy of a probability vector is constant)");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::SelectiveClassification: return "sc";
    case Task::OodDetection: return "ood";
    case Task::Scod: return "scod";
  }
  return "?";
}

std::string to_string(ScoreKind kind) { return kind == ScoreKind::NegMsp ? "msp" : "energy"; }

std::string to_string(Combine combine) { return combine == Combine::PredictiveDistribution ? "pred" : "member"; }

PrefixOutput prefix_evaluate(const ScoreTable& table, const ScoreMethod& method, Index prefix_len) {
  validate(method);
  if (prefix_len < 1 || prefix_len > table.n_stages())
    throw ConfigError("prefix length " + std::to_string(prefix_len) + " outside [1, " +
                      std::to_string(table.n_stages()) + "]");
  const Index n = table.n_samples();
  const Index k = table.n_classes();
  PrefixOutput out{Eigen::VectorXd(n), Eigen::VectorXi(n), prefix_len};
  Eigen::VectorXd mean(k);
  Eigen::VectorXd logits(k);
  const auto count = static_cast<double>(prefix_len);
  for (Index i = 0; i < n; ++i) {
    mean.setZero();
    double member_sum = 0.0;
    for (Index m = 0; m < prefix_len; ++m) {
      logits = table.stage(m).row(i).transpose().cast<double>();
      const Eigen::VectorXd p = softmax(logits);
      mean += p;
      if (method.combine == Combine::MemberMean)
        member_sum += method.kind == ScoreKind::NegMsp ? neg_msp(p) : energy(logits);
    }
    mean /= count;
    out.prediction[i] = static_cast<int>(argmax(mean));
    out.uncertainty[i] = method.combine == Combine::PredictiveDistribution ? neg_msp(mean) : member_sum / count;
  }
  return out;
}

}  // namespace wincascade
