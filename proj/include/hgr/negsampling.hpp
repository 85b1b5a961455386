#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hierarchy.hpp"

namespace hgr {

enum class SamplingKind { Random, Sibling, Similarity, TopM };

struct SamplingStrategy {
  SamplingKind kind = SamplingKind::TopM;
  /// Number of shallower layers TopM reaches above the anchor.
  int m = 1;
};

struct SamplerContext {
  int epsilon = 256;
  std::uint64_t stream_key = 0;
  /// Sorted ids that may never be returned (the true-label path).
  std::span<const NodeId> forbidden;
};

SamplingKind parse_sampling_kind(const std::string& text);
std::string to_string(SamplingKind kind);

/// Unfiltered candidate pool for `anchor`, sorted by id. The root is never
/// a candidate. Similarity returns every non-root class (ranking happens in
/// sample_negatives).
std::vector<NodeId> candidate_pool(const HierarchyDag& dag, const SamplingStrategy& strategy, NodeId anchor);

/// Draws min(epsilon, |pool \ forbidden \ {anchor}|) distinct negatives.
/// Similarity takes the most similar candidates (ties by ascending id);
/// the other strategies draw uniformly without replacement from the stream.
/// `class_embeddings` rows are indexed by node id and must be unit norm;
/// only Similarity reads them.
std::vector<NodeId> sample_negatives(const HierarchyDag& dag, const SamplingStrategy& strategy, NodeId anchor,
                                     const SamplerContext& ctx, const RowMatrixXd* class_embeddings);

}  // namespace hgr
