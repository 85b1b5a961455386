#include "hgr/negsampling.hpp"

#include <algorithm>
#include <numeric>

#include "hgr/rng.hpp"

namespace hgr {

SamplingKind parse_sampling_kind(const std::string& text) {
  if (text == "random") return SamplingKind::Random;
  if (text == "sibling") return SamplingKind::Sibling;
  if (text == "similarity") return SamplingKind::Similarity;
  if (text == "topm") return SamplingKind::TopM;
  fail(ErrorCode::Usage, "unknown sampling strategy '" + text + "'");
}

std::string to_string(SamplingKind kind) {
  switch (kind) {
    case SamplingKind::Random: return "random";
    case SamplingKind::Sibling: return "sibling";
    case SamplingKind::Similarity: return "similarity";
    case SamplingKind::TopM: return "topm";
  }
  return "?";
}

std::vector<NodeId> candidate_pool(const HierarchyDag& dag, const SamplingStrategy& strategy, NodeId anchor) {
  if (!dag.contains(anchor)) fail(ErrorCode::UnknownNode, "unknown anchor id " + std::to_string(anchor.value));
  if (anchor == dag.root()) fail(ErrorCode::InvalidInput, "the root cannot anchor negative sampling");
  if (strategy.m < 0) fail(ErrorCode::InvalidInput, "TopM m must be non-negative");

  std::vector<NodeId> pool;
  switch (strategy.kind) {
    case SamplingKind::Sibling: {
      auto sib = dag.siblings(anchor);
      pool.assign(sib.begin(), sib.end());
      break;
    }
    case SamplingKind::TopM: {
      const int hi = dag.depth(anchor);
      const int lo = std::max(1, hi - strategy.m);
      for (int l = lo; l <= hi; ++l) {
        auto layer = dag.nodes_at_depth(l);
        pool.insert(pool.end(), layer.begin(), layer.end());
      }
      std::sort(pool.begin(), pool.end());
      break;
    }
    case SamplingKind::Random:
    case SamplingKind::Similarity:
      pool.reserve(dag.node_count() - 1);
      for (std::size_t c = 0; c < dag.node_count(); ++c) {
        if (NodeId(c) != dag.root()) pool.emplace_back(c);
      }
      break;
  }
  return pool;
}

std::vector<NodeId> sample_negatives(const HierarchyDag& dag, const SamplingStrategy& strategy, NodeId anchor,
                                     const SamplerContext& ctx, const RowMatrixXd* class_embeddings) {
  if (ctx.epsilon < 1) fail(ErrorCode::InvalidInput, "epsilon must be at least 1");
  if (strategy.kind == SamplingKind::Similarity) {
    if (class_embeddings == nullptr || class_embeddings->rows() != static_cast<Eigen::Index>(dag.node_count())) {
      fail(ErrorCode::MissingEmbeddings, "similarity sampling needs an embedding for every class");
    }
  }

  std::vector<NodeId> pool = candidate_pool(dag, strategy, anchor);
  std::erase_if(pool, [&](NodeId c) {
    return c == anchor || std::binary_search(ctx.forbidden.begin(), ctx.forbidden.end(), c);
  });
  const std::size_t n = std::min(pool.size(), static_cast<std::size_t>(ctx.epsilon));

  if (strategy.kind == SamplingKind::Similarity) {
    const auto a = class_embeddings->row(anchor.index());
    std::vector<std::pair<double, NodeId>> scored;
    scored.reserve(pool.size());
    for (NodeId c : pool) scored.emplace_back(cosine_sim(a, class_embeddings->row(c.index())), c);
    auto by_similarity = [](const auto& x, const auto& y) {
      return x.first > y.first || (x.first == y.first && x.second < y.second);
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), by_similarity);
    std::vector<NodeId> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
    return out;
  }

  // Partial Fisher-Yates: the first n slots end up a uniform draw without
  // replacement, in draw order.
  CounterRng rng(ctx.stream_key);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace hgr
