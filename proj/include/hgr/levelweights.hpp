#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>

#include "hgr/error.hpp"

namespace hgr {

enum class WeightingKind { Equal, LinearInc, LinearDec, ExpInc, ExpDec, AdaptiveLearned, InverseFrequency };

WeightingKind parse_weighting_kind(const std::string& text);
std::string to_string(WeightingKind kind);

/// Per-depth level weights; entry j - 1 holds the weight for depth j.
using WeightVector = Eigen::VectorXd;

/// Unconstrained logits of the adaptive weighting; weights = softmax(raw).
struct AdaptiveParams {
  Eigen::VectorXd raw;

  static AdaptiveParams zeros(int max_depth) { return {Eigen::VectorXd::Zero(max_depth)}; }
};

/// Weights over depths 1..max_depth, normalized to sum to one.
/// `per_depth_class_counts[j - 1]` is the number of classes at depth j.
WeightVector compute_weights(WeightingKind kind, int max_depth,
                             std::span<const std::size_t> per_depth_class_counts = {},
                             const AdaptiveParams* params = nullptr);

/// Numerically stable softmax.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar shift = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

/// Pulls a gradient w.r.t. softmax outputs back to the logits.
inline Eigen::VectorXd softmax_backward(const Eigen::VectorXd& weights, const Eigen::VectorXd& d_weights) {
  return weights.cwiseProduct((d_weights.array() - weights.dot(d_weights)).matrix());
}

}  // namespace hgr
