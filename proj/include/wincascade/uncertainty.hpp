#pragma once

#include "wincascade/score_table.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace wincascade {

enum class Task { SelectiveClassification, OodDetection, Scod };

enum class ScoreKind {
  NegMsp,  ///< U = -max_k p_k
  Energy,  ///< U = -log sum_k exp v_k
};

enum class Combine {
  PredictiveDistribution,  ///< score of the prefix-mean softmax
  MemberMean,              ///< mean of per-member scores
};

struct ScoreMethod {
  ScoreKind kind = ScoreKind::NegMsp;
  Combine combine = Combine::PredictiveDistribution;

  friend bool operator==(const ScoreMethod&, const ScoreMethod&) = default;
};

/// SC and SCOD use NegMsp on the predictive distribution, OOD detection
/// uses member-averaged Energy.
ScoreMethod default_method(Task task);

/// Throws ConfigError for Energy on the predictive distribution, which is
/// identically zero for any probability vector.
void validate(const ScoreMethod& method);

std::string to_string(Task task);
std::string to_string(ScoreKind kind);
std::string to_string(Combine combine);

/// Softmax with max-subtraction; finite input gives a distribution summing to 1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.derived().reshaped().array() - top).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
typename Derived::Scalar neg_msp(const Eigen::MatrixBase<Derived>& probs) {
  return -probs.maxCoeff();
}

template <typename Derived>
typename Derived::Scalar energy(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  return -(top + std::log((logits.array() - top).exp().sum()));
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& values) {
  Index best = 0;
  for (Index k = 1; k < values.size(); ++k)
    if (values(k) > values(best)) best = k;
  return best;
}

/// Ensemble output of the first `prefix_len` stages for every sample.
struct PrefixOutput {
  Eigen::VectorXd uncertainty;
  Eigen::VectorXi prediction;
  Index prefix_len = 0;
};

/// Combines stages 1..prefix_len: prediction is the argmax of the mean
/// softmax; uncertainty follows `method.combine`.
PrefixOutput prefix_evaluate(const ScoreTable& table, const ScoreMethod& method, Index prefix_len);

}  // namespace wincascade
