#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hierarchy.hpp"
#include "hgr/levelweights.hpp"
#include "hgr/negsampling.hpp"

namespace hgr {

/// How the K / M ratios map to loop start depths.
///  algorithmic: start = clamp(ceil(ratio * d), 1, d)
///  ablation:    start = clamp(d - floor(ratio * d), 1, d)
enum class RangeConvention { Algorithmic, Ablation };

enum class LossVariant { Full, OuterOnly, InnerOnly, Flat };

RangeConvention parse_range_convention(const std::string& text);
std::string to_string(RangeConvention c);
LossVariant parse_loss_variant(const std::string& text);
std::string to_string(LossVariant v);

struct LossConfig {
  double outer_ratio = 0.25;  // K
  double inner_ratio = 0.5;   // M
  int epsilon = 256;
  double tau = 0.07;
  double tau_min = 0.01;
  double tau_max = 1.0;
  SamplingStrategy sampling{};
  WeightingKind weighting = WeightingKind::AdaptiveLearned;
  RangeConvention range = RangeConvention::Algorithmic;
  LossVariant variant = LossVariant::Full;
  /// Rescale the level weights over each sample's active outer levels.
  bool renormalize_active_weights = false;
};

/// Inclusive depth range [start, end] of a loop.
struct LevelRange {
  int start = 1;
  int end = 1;

  bool operator==(const LevelRange&) const = default;
};

LevelRange outer_range(double outer_ratio, int depth, RangeConvention convention);
LevelRange inner_range(double inner_ratio, int positive_depth, RangeConvention convention);

/// -log(e^{pos/tau} / (e^{pos/tau} + sum_q e^{neg_q/tau})) via a max-shifted
/// log-sum-exp.
template <typename Scalar>
Scalar pair_loss(Scalar pos_sim, std::span<const Scalar> neg_sims, Scalar tau) {
  if (!(tau > Scalar(0))) fail(ErrorCode::NonPositiveTemperature, "temperature must be positive");
  if (neg_sims.empty()) return Scalar(0);
  const Scalar pos = pos_sim / tau;
  Scalar shift = pos;
  for (Scalar s : neg_sims) shift = std::max(shift, s / tau);
  Scalar sum = std::exp(pos - shift);
  for (Scalar s : neg_sims) sum += std::exp(s / tau - shift);
  return std::max(Scalar(0), shift + std::log(sum) - pos);
}

template <typename Scalar>
Scalar pair_loss(Scalar pos_sim, std::initializer_list<Scalar> neg_sims, Scalar tau) {
  return pair_loss<Scalar>(pos_sim, std::span<const Scalar>(neg_sims.begin(), neg_sims.size()), tau);
}

/// Class table prepared for loss evaluation: unit rows plus the norms of the
/// raw rows they came from (gradients flow back through the normalization).
class ClassFeatures {
 public:
  explicit ClassFeatures(const RowMatrixXd& raw);
  explicit ClassFeatures(const FeatureMatrix& raw) : ClassFeatures(raw.values) {}

  const RowMatrixXd& unit() const { return unit_; }
  double norm(NodeId c) const { return norms_[c.index()]; }
  Eigen::Index dim() const { return unit_.cols(); }
  Eigen::Index rows() const { return unit_.rows(); }

 private:
  RowMatrixXd unit_;
  Eigen::VectorXd norms_;
};

/// Identifies the random streams of one training sample.
struct SampleRng {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t image_id = 0;
};

std::uint64_t pair_stream_key(const SampleRng& rng, int outer, int inner);

struct PairTerm {
  int outer = 0;  // depth j of the positive
  int inner = 0;  // depth l of the negative anchor
  NodeId positive;
  NodeId anchor;
  std::vector<NodeId> negatives;
  double value = 0.0;
};

struct LossBreakdown {
  std::vector<PairTerm> terms;
  std::map<int, double> per_level;     // L_j
  std::map<int, double> weights_used;  // weight applied to L_j
  double total = 0.0;
};

/// Sparse per-class gradient; `ids` sorted, row i belongs to ids[i].
struct ClassGradient {
  std::vector<NodeId> ids;
  RowMatrixXd rows;

  const double* find(NodeId c) const;
};

struct GradientSet {
  Eigen::VectorXd d_image;
  ClassGradient d_class;
  double d_tau = 0.0;
  Eigen::VectorXd d_weights;   // w.r.t. the supplied weight vector
  Eigen::VectorXd d_adaptive;  // w.r.t. adaptive logits (zero unless adaptive)
};

/// Per-sample hierarchical loss. `weights` has one entry per depth
/// 1..dag.max_depth(); rows of `classes` are indexed by node id.
LossBreakdown sample_loss(const HierarchyDag& dag, const LossConfig& config, const Eigen::VectorXd& image_vec,
                          NodeId label, const ClassFeatures& classes, const WeightVector& weights,
                          const SampleRng& rng);

std::pair<LossBreakdown, GradientSet> sample_grad(const HierarchyDag& dag, const LossConfig& config,
                                                  const Eigen::VectorXd& image_vec, NodeId label,
                                                  const ClassFeatures& classes, const WeightVector& weights,
                                                  const SampleRng& rng);

struct BatchResult {
  LossBreakdown mean;  // total and per_level averaged over the batch; no terms
  GradientSet grad;    // gradient of the mean total
};

/// Mean loss over `rows` of `data`. Samples may be evaluated on several
/// threads; the reduction runs in row order so results do not depend on
/// `threads`.
BatchResult batch_loss(const HierarchyDag& dag, const LossConfig& config, const Dataset& data,
                       std::span<const std::size_t> rows, const ClassFeatures& classes, const WeightVector& weights,
                       std::uint64_t seed, std::uint64_t epoch, int threads = 1);

}  // namespace hgr
