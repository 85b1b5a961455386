#include "hgr/levelweights.hpp"

#include <cmath>

namespace hgr {

WeightingKind parse_weighting_kind(const std::string& text) {
  if (text == "equal") return WeightingKind::Equal;
  if (text == "lin-inc") return WeightingKind::LinearInc;
  if (text == "lin-dec") return WeightingKind::LinearDec;
  if (text == "exp-inc") return WeightingKind::ExpInc;
  if (text == "exp-dec") return WeightingKind::ExpDec;
  if (text == "adaptive") return WeightingKind::AdaptiveLearned;
  if (text == "inv-freq") return WeightingKind::InverseFrequency;
  fail(ErrorCode::Usage, "unknown weighting strategy '" + text + "'");
}

std::string to_string(WeightingKind kind) {
  switch (kind) {
    case WeightingKind::Equal: return "equal";
    case WeightingKind::LinearInc: return "lin-inc";
    case WeightingKind::LinearDec: return "lin-dec";
    case WeightingKind::ExpInc: return "exp-inc";
    case WeightingKind::ExpDec: return "exp-dec";
    case WeightingKind::AdaptiveLearned: return "adaptive";
    case WeightingKind::InverseFrequency: return "inv-freq";
  }
  return "?";
}

WeightVector compute_weights(WeightingKind kind, int max_depth, std::span<const std::size_t> per_depth_class_counts,
                             const AdaptiveParams* params) {
  if (max_depth < 1) fail(ErrorCode::InvalidInput, "max depth must be at least 1");
  const Eigen::Index n = max_depth;
  WeightVector w(n);
  switch (kind) {
    case WeightingKind::Equal:
      w.setOnes();
      break;
    case WeightingKind::LinearInc:
      for (Eigen::Index j = 1; j <= n; ++j) w[j - 1] = static_cast<double>(j);
      break;
    case WeightingKind::LinearDec:
      for (Eigen::Index j = 1; j <= n; ++j) w[j - 1] = static_cast<double>(n - j + 1);
      break;
    case WeightingKind::ExpInc:
      // 2^(j - n) keeps the largest term at 1 for deep trees.
      for (Eigen::Index j = 1; j <= n; ++j) w[j - 1] = std::ldexp(1.0, static_cast<int>(j - n));
      break;
    case WeightingKind::ExpDec:
      for (Eigen::Index j = 1; j <= n; ++j) w[j - 1] = std::ldexp(1.0, static_cast<int>(1 - j));
      break;
    case WeightingKind::InverseFrequency:
      if (per_depth_class_counts.empty()) fail(ErrorCode::MissingCounts, "inverse-frequency weighting needs per-depth class counts");
      if (static_cast<Eigen::Index>(per_depth_class_counts.size()) != n) {
        fail(ErrorCode::DimMismatch, "expected " + std::to_string(n) + " per-depth counts");
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (per_depth_class_counts[j] == 0) fail(ErrorCode::ZeroCount, "depth " + std::to_string(j + 1) + " has no classes");
        w[j] = 1.0 / static_cast<double>(per_depth_class_counts[j]);
      }
      break;
    case WeightingKind::AdaptiveLearned:
      if (params == nullptr) fail(ErrorCode::MissingParams, "adaptive weighting needs its learnable parameters");
      if (params->raw.size() != n) fail(ErrorCode::DimMismatch, "adaptive parameters must have one entry per depth");
      if (!params->raw.allFinite()) fail(ErrorCode::InvalidInput, "adaptive parameters must be finite");
      return softmax(params->raw);
  }
  return w / w.sum();
}

}  // namespace hgr
