#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hgrloss.hpp"
#include "hgr/hierarchy.hpp"
#include "hgr/levelweights.hpp"

namespace hgr {

/// How learnable node vectors become class features.
///  table:    class c uses its own row.
///  path-sum: class c uses the sum of the rows of every non-root node on its
///            root-to-c path, so classes without images still share what
///            their ancestors learned.
enum class EncoderKind { Table, PathSum };

EncoderKind parse_encoder_kind(const std::string& text);
std::string to_string(EncoderKind kind);

/// Raw (unnormalized) class features for every node.
RowMatrixXd encode_classes(const HierarchyDag& dag, EncoderKind kind, const RowMatrixXd& node_params);

/// Maps a gradient w.r.t. raw class features onto the node parameters.
/// Returns a GradientSet whose d_class rows are per-node gradients; the
/// scalar and per-depth fields are copied through.
GradientSet encoder_backward(const HierarchyDag& dag, EncoderKind kind, const GradientSet& class_grad);

/// Global L2 norm over d_class, d_tau and d_adaptive (the learnable
/// quantities); d_image and d_weights are diagnostics and left out.
double global_grad_norm(const GradientSet& grads);

/// Rescales the learnable gradients so their global norm is at most max_norm.
GradientSet clip_grad_norm(GradientSet grads, double max_norm);

enum class LrSchedule { Constant, Cosine };

LrSchedule parse_lr_schedule(const std::string& text);
std::string to_string(LrSchedule s);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double lr_main = 1e-2;
  double lr_adaptive = 1e-4;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  LrSchedule schedule = LrSchedule::Cosine;
  std::uint64_t seed = 0;
  int threads = 1;
  EncoderKind encoder = EncoderKind::PathSum;
  /// Project node parameters back to the unit sphere after each step.
  bool renormalize_nodes = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

void validate(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double tau = 0.0;
  WeightVector weights;
};

struct TrainLog {
  double initial_loss = 0.0;
  std::vector<EpochLog> epochs;
};

/// Learnable state: node vectors (one unit-norm row per node), the
/// temperature, and the adaptive weighting logits.
struct ModelState {
  FeatureMatrix node_params;
  double tau = 0.07;
  AdaptiveParams adaptive;
};

/// Fresh model: random unit node vectors, tau from the loss config, zero
/// adaptive logits.
ModelState init_model(const HierarchyDag& dag, Eigen::Index dim, const LossConfig& loss_cfg, std::uint64_t seed);

/// Weights the loss should use for the current state.
WeightVector current_weights(const HierarchyDag& dag, WeightingKind kind, const AdaptiveParams& adaptive);

/// Unit-norm class features for evaluation; owner id = node id.
FeatureMatrix class_features(const HierarchyDag& dag, EncoderKind kind, const ModelState& state);

struct TrainResult {
  ModelState state;
  FeatureMatrix class_features;
  TrainLog log;
};

/// Mean loss over the whole dataset without updating anything.
double mean_loss(const HierarchyDag& dag, const Dataset& data, const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                 const ModelState& state, std::uint64_t epoch);

TrainResult train(const HierarchyDag& dag, const Dataset& data, const ClassSplit& split, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, ModelState state);

struct FewShotData {
  Dataset train;
  Dataset test;
  /// Classes that may appear as training labels (seen plus few-shot unseen).
  ClassSplit train_split;
};

/// Splits all images into training (seen classes plus k seeded-random images
/// of every unseen class) and test (the remaining unseen images).
FewShotData fewshot_extend(const Dataset& all, const ClassSplit& split, int k, std::uint64_t seed);

}  // namespace hgr
