#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hierarchy.hpp"
#include "oracles.hpp"

namespace fixture {

// Eight nodes:
//        R
//      /   \
//     A     B
//    / \    |
//   C   D   E
//  / \
// F   G
inline std::vector<hgr::Edge> eight_node_edges() {
  return {{"A", "R"}, {"B", "R"}, {"C", "A"}, {"D", "A"}, {"E", "B"}, {"F", "C"}, {"G", "C"}};
}

inline oracle::Tree eight_node_tree() {
  oracle::Tree t;
  t.parent = {{"R", ""}, {"A", "R"}, {"B", "R"}, {"C", "A"}, {"D", "A"}, {"E", "B"}, {"F", "C"}, {"G", "C"}};
  return t;
}

constexpr int kDim = 4;

/// Fixed, deliberately non-unit embedding for a node name.
inline oracle::Vec embedding(const std::string& name) {
  const double s = static_cast<double>(name[0] - 'A' + 1);
  oracle::Vec v(kDim);
  for (int k = 0; k < kDim; ++k) v[static_cast<std::size_t>(k)] = std::sin(1.3 * s + 0.7 * k + 0.1) + 0.05 * k;
  return v;
}

inline oracle::Vec image() { return {0.3, -0.5, 0.7, 0.2}; }

inline std::map<std::string, oracle::Vec> embeddings(const hgr::HierarchyDag& dag) {
  std::map<std::string, oracle::Vec> out;
  for (std::size_t i = 0; i < dag.node_count(); ++i) out[dag.name(hgr::NodeId(i))] = embedding(dag.name(hgr::NodeId(i)));
  return out;
}

/// Raw class table indexed by node id.
inline hgr::RowMatrixXd class_table(const hgr::HierarchyDag& dag) {
  hgr::RowMatrixXd m(static_cast<Eigen::Index>(dag.node_count()), kDim);
  for (std::size_t i = 0; i < dag.node_count(); ++i) {
    const auto v = embedding(dag.name(hgr::NodeId(i)));
    for (int k = 0; k < kDim; ++k) m(static_cast<Eigen::Index>(i), k) = v[static_cast<std::size_t>(k)];
  }
  return m;
}

inline Eigen::VectorXd unit_image() {
  const auto v = oracle::unit(image());
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace fixture
