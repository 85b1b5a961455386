#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "hgr/hierarchy.hpp"
#include "hgr/rng.hpp"

namespace testutil {

/// Random tree over n nodes named t0..t{n-1}; t0 is the root.
inline std::vector<hgr::Edge> random_tree(std::uint64_t seed, int n) {
  hgr::CounterRng rng(seed);
  std::vector<hgr::Edge> edges;
  for (int i = 1; i < n; ++i) {
    edges.push_back({"t" + std::to_string(i), "t" + std::to_string(rng.below(static_cast<std::uint64_t>(i)))});
  }
  return edges;
}

/// Random DAG over n nodes: node i > 0 picks 1..3 parents among 0..i-1.
inline std::vector<hgr::Edge> random_dag(std::uint64_t seed, int n) {
  hgr::CounterRng rng(seed);
  std::vector<hgr::Edge> edges;
  for (int i = 1; i < n; ++i) {
    const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(3, static_cast<std::uint64_t>(i))));
    std::set<int> ps;
    while (static_cast<int>(ps.size()) < k) ps.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(i))));
    for (int p : ps) edges.push_back({"n" + std::to_string(i), "n" + std::to_string(p)});
  }
  return edges;
}

/// Uniform non-root node.
inline hgr::NodeId random_non_root(const hgr::HierarchyDag& dag, hgr::CounterRng& rng) {
  const std::size_t r = dag.root().index();
  const std::size_t k = rng.below(dag.node_count() - 1);
  return hgr::NodeId(k < r ? k : k + 1);
}

}  // namespace testutil
