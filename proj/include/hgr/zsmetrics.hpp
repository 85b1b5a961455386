#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hierarchy.hpp"

namespace hgr {

enum class CandidateMode { Zsl, Gzsl };

CandidateMode parse_candidate_mode(const std::string& text);
std::string to_string(CandidateMode mode);

/// Classes an image may be assigned to: unseen (zsl) or seen and unseen
/// (gzsl), sorted by id.
std::vector<NodeId> candidate_classes(const ClassSplit& split, CandidateMode mode);

/// Candidates plus all their non-root ancestors, sorted by id. Layer-wise
/// prediction picks from this set one depth at a time.
std::vector<NodeId> candidate_closure(const HierarchyDag& dag, std::span<const NodeId> candidates);

/// Candidates by descending cosine similarity, ties by ascending id.
/// `class_features` rows are indexed by node id and unit norm. The
/// temperature rescales every score equally and does not change the order.
std::vector<NodeId> rank_candidates(const Eigen::VectorXd& image_vec, std::span<const NodeId> candidates,
                                    const RowMatrixXd& class_features, double tau = 1.0);

/// Fraction of rankings whose label sits in the first k entries, per k.
std::map<int, double> hit_at_k(std::span<const std::vector<NodeId>> rankings, std::span<const NodeId> labels,
                               std::span<const int> ks);

/// |predictions ∩ (non-root ancestors(label) ∪ {label})| / depth(label).
double tor(const HierarchyDag& dag, std::span<const NodeId> predictions, NodeId label);
double tor(const HierarchyDag& dag, NodeId top1, NodeId label);

/// Layer-by-layer prediction from depth 1 to depth(label): at every depth the
/// most similar class of `closure` at that depth (none if empty). `closure`
/// must be sorted; ties go to the smaller id.
std::vector<NodeId> predict_layers(const HierarchyDag& dag, const Eigen::VectorXd& image_vec, NodeId label,
                                   const RowMatrixXd& class_features, std::span<const NodeId> closure);

/// |layer predictions ∩ true path without root| / depth(label).
double por(const HierarchyDag& dag, const Eigen::VectorXd& image_vec, NodeId label, const RowMatrixXd& class_features,
           std::span<const NodeId> closure);

struct DepthStats {
  std::size_t n_images = 0;
  double hit1 = 0.0;
  double tor = 0.0;
  double por = 0.0;

  bool operator==(const DepthStats&) const = default;
};

struct MetricReport {
  std::map<int, double> hit_at;
  double tor = 0.0;
  double por = 0.0;
  std::map<int, DepthStats> per_depth;  // keyed by label depth
  std::size_t n_images = 0;
  std::size_t n_candidates = 0;

  bool operator==(const MetricReport&) const = default;
};

struct EvalOptions {
  CandidateMode mode = CandidateMode::Zsl;
  std::vector<int> ks{1, 2, 5, 10, 20};
  int tor_topk = 1;
};

MetricReport evaluate(const HierarchyDag& dag, const Dataset& test, const ClassSplit& split,
                      const FeatureMatrix& class_features, double tau, const EvalOptions& options);

/// key=value lines followed by a per-depth TSV table.
std::string format_report(const MetricReport& report);

}  // namespace hgr
