#pragma once

#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hgrloss.hpp"
#include "hgr/hierarchy.hpp"
#include "hgr/synthgen.hpp"
#include "hgr/trainer.hpp"
#include "hgr/zsmetrics.hpp"

namespace hgr {

/// A taxonomy, every labelled image, and the seen/unseen split.
struct ExperimentData {
  HierarchyDag dag;
  Dataset all;
  ClassSplit split;
};

// Data directory layout: hierarchy.tsv, split.tsv, images.hgrf, labels.tsv,
// and (for synthetic data) meta.
inline constexpr const char* kHierarchyFile = "hierarchy.tsv";
inline constexpr const char* kSplitFile = "split.tsv";
inline constexpr const char* kImagesFile = "images.hgrf";
inline constexpr const char* kLabelsFile = "labels.tsv";
inline constexpr const char* kMetaFile = "meta";
inline constexpr const char* kClassFeaturesFile = "class_features.hgrf";
inline constexpr const char* kNodeParamsFile = "node_params.hgrf";

ExperimentData synth_data(const SynthConfig& cfg);
void write_synth_dir(const std::string& dir, const SynthConfig& cfg, const ExperimentData& data);
ExperimentData load_data_dir(const std::string& dir, const LoadOptions& options = {});

struct RunConfig {
  LossConfig loss;
  TrainConfig train;
  EvalOptions eval;
};

struct RunResult {
  TrainResult trained;
  MetricReport report;
};

/// Trains on `train` and evaluates on `test`, starting from a model seeded by
/// cfg.train.seed.
RunResult train_and_evaluate(const ExperimentData& data, const Dataset& train, const ClassSplit& train_split,
                             const Dataset& test, const RunConfig& cfg);

/// Zero-shot protocol: train on seen-class images, test on unseen images.
RunResult run_zsl(const ExperimentData& data, const RunConfig& cfg);

struct Checkpoint {
  FeatureMatrix class_features;
  FeatureMatrix node_params;
  double tau = 0.07;
};

void write_checkpoint(const std::string& dir, const HierarchyDag& dag, const RunConfig& cfg, const TrainResult& result);
Checkpoint read_checkpoint(const std::string& dir);

enum class AblationAxis { OuterRatio, InnerRatio, Sampling, Weighting, Variant };

AblationAxis parse_ablation_axis(const std::string& text);
std::string to_string(AblationAxis axis);

/// Copy of `base` with the swept setting replaced by `value`.
RunConfig apply_axis(const RunConfig& base, AblationAxis axis, const std::string& value);

struct TableRow {
  std::string value;
  MetricReport report;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct ResultTable {
  std::string axis;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<TableRow> rows;
  std::vector<std::string> warnings;
};

/// One train + eval per value on the same data and seed, in value order.
ResultTable run_ablate(const ExperimentData& data, const RunConfig& base, AblationAxis axis,
                       const std::vector<std::string>& values);

/// One row per distinct shot count (duplicates dropped with a warning).
ResultTable run_fewshot(const ExperimentData& data, const RunConfig& base, const std::vector<int>& shots);

/// key=value header block, a blank line, then a TSV table.
std::string format_table(const ResultTable& table);

std::string format_run_meta(const RunConfig& cfg);

}  // namespace hgr
