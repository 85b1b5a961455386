#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgr/featurestore.hpp"
#include "hgr/hierarchy.hpp"

namespace hgr {

struct SynthConfig {
  int depth = 5;
  int branching = 3;
  int dim = 32;
  /// Prototype diffusion scale for children at depth 1..depth.
  std::vector<double> sigma_class{0.8, 0.6, 0.45, 0.35, 0.25};
  double sigma_image = 0.3;
  int images_per_class = 20;
  double seen_fraction = 0.7;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// Edge list of the balanced tree: root "r", children named by their path
/// ("n0", "n0.2", ...), emitted in breadth-first order.
std::vector<Edge> gen_edges(const SynthConfig& cfg);
HierarchyDag gen_hierarchy(const SynthConfig& cfg);

/// Unit prototypes per node (owner id = node id); each child is its parent's
/// prototype plus isotropic gaussian noise of expected norm sigma (the
/// child's depth scale), renormalized. Images use the same noise scaling.
FeatureMatrix gen_prototypes(const HierarchyDag& dag, const SynthConfig& cfg);

struct SynthData {
  Dataset images;  // every leaf image, seen and unseen
  ClassSplit split;
};

/// Leaf images around their prototypes plus a seen/unseen split of the
/// leaves. The seen total is round(seen_fraction * leaves), apportioned over
/// sibling groups by largest remainder so every group gets its share.
SynthData gen_dataset(const HierarchyDag& dag, const FeatureMatrix& prototypes, const SynthConfig& cfg);

/// Seen-leaf count per sibling group for `leaves_per_group` group sizes.
std::vector<int> apportion_seen(const std::vector<int>& leaves_per_group, double seen_fraction, std::uint64_t seed);

std::string format_synth_meta(const SynthConfig& cfg);

}  // namespace hgr
