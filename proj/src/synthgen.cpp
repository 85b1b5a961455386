#include "hgr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hgr/rng.hpp"

namespace hgr {
namespace {

constexpr std::uint64_t kProtoStream = 0x9807;
constexpr std::uint64_t kImageStream = 0x1A6E;
constexpr std::uint64_t kSplitStream = 0x5B17;

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.depth < 2) fail(ErrorCode::InvalidInput, "synthetic depth must be at least 2");
  if (cfg.branching < 2) fail(ErrorCode::InvalidInput, "synthetic branching must be at least 2");
  if (cfg.dim < 1) fail(ErrorCode::InvalidInput, "synthetic dim must be positive");
  if (static_cast<int>(cfg.sigma_class.size()) != cfg.depth) {
    fail(ErrorCode::InvalidInput, "sigma_class needs one entry per depth (" + std::to_string(cfg.depth) + ")");
  }
  for (double s : cfg.sigma_class) {
    if (!(s >= 0.0)) fail(ErrorCode::InvalidInput, "sigma_class entries must be non-negative");
  }
  if (!(cfg.sigma_image >= 0.0)) fail(ErrorCode::InvalidInput, "sigma_image must be non-negative");
  if (cfg.images_per_class < 1) fail(ErrorCode::InvalidInput, "images_per_class must be positive");
  if (!(cfg.seen_fraction > 0.0 && cfg.seen_fraction < 1.0)) {
    fail(ErrorCode::InvalidInput, "seen_fraction must lie in (0, 1)");
  }
}

std::vector<Edge> gen_edges(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<Edge> edges;
  std::vector<std::string> layer{"r"};
  for (int d = 1; d <= cfg.depth; ++d) {
    std::vector<std::string> next;
    for (const auto& parent : layer) {
      for (int b = 0; b < cfg.branching; ++b) {
        next.push_back(parent + "." + std::to_string(b));
        edges.push_back({next.back(), parent});
      }
    }
    layer = std::move(next);
  }
  return edges;
}

HierarchyDag gen_hierarchy(const SynthConfig& cfg) {
  const auto edges = gen_edges(cfg);
  LoadOptions opts;
  opts.declared_root = "r";
  return load_hierarchy(edges, opts);
}

FeatureMatrix gen_prototypes(const HierarchyDag& dag, const SynthConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<Eigen::Index>(dag.node_count());
  RowMatrixXd protos(n, cfg.dim);
  std::vector<std::uint64_t> owners(dag.node_count());
  std::iota(owners.begin(), owners.end(), std::uint64_t{0});

  const double unit_scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (int d = 0; d <= dag.max_depth(); ++d) {
    for (NodeId c : dag.nodes_at_depth(d)) {
      CounterRng rng(derive_key({cfg.seed, kProtoStream, c.value}));
      Eigen::RowVectorXd noise(cfg.dim);
      // Per-coordinate std 1/sqrt(dim): the noise has unit expected norm, so
      // each sigma is relative to a unit-norm parent.
      for (int k = 0; k < cfg.dim; ++k) noise[k] = rng.gaussian() * unit_scale;
      Eigen::RowVectorXd p;
      if (d == 0) {
        p = noise;
      } else {
        const NodeId parent = dag.ancestor_path(c).back();
        p = protos.row(parent.index()) + cfg.sigma_class[static_cast<std::size_t>(d - 1)] * noise;
      }
      protos.row(c.index()) = p.normalized();
    }
  }
  return FeatureMatrix(std::move(owners), std::move(protos));
}

std::vector<int> apportion_seen(const std::vector<int>& leaves_per_group, double seen_fraction, std::uint64_t seed) {
  const int total_leaves = std::accumulate(leaves_per_group.begin(), leaves_per_group.end(), 0);
  const int target = static_cast<int>(std::lround(seen_fraction * total_leaves));
  const std::size_t g = leaves_per_group.size();

  std::vector<int> seen(g);
  std::vector<double> remainder(g);
  for (std::size_t i = 0; i < g; ++i) {
    const int n = leaves_per_group[i];
    const double quota = seen_fraction * n;
    int base = static_cast<int>(std::floor(quota));
    if (n >= 2) base = std::clamp(base, 1, n - 1);
    seen[i] = std::min(base, n);
    remainder[i] = quota - seen[i];
  }

  // Largest remainder first; equal remainders in a seeded order.
  std::vector<std::uint64_t> tiebreak(g);
  for (std::size_t i = 0; i < g; ++i) tiebreak[i] = derive_key({seed, kSplitStream, 0xA11ULL, i});
  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return tiebreak[a] < tiebreak[b];
  });

  int delta = target - std::accumulate(seen.begin(), seen.end(), 0);
  // First keep a mixed group wherever possible, then relax to the full range.
  for (int pass = 0; pass < 2 && delta != 0; ++pass) {
    bool moved = true;
    while (delta != 0 && moved) {
      moved = false;
      if (delta > 0) {
        for (std::size_t i : order) {
          const int n = leaves_per_group[i];
          const int cap = (pass == 0 && n >= 2) ? n - 1 : n;
          if (delta > 0 && seen[i] < cap) {
            ++seen[i];
            --delta;
            moved = true;
          }
        }
      } else {
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
          const int n = leaves_per_group[*it];
          const int floor_ = (pass == 0 && n >= 2) ? 1 : 0;
          if (delta < 0 && seen[*it] > floor_) {
            --seen[*it];
            ++delta;
            moved = true;
          }
        }
      }
    }
  }
  return seen;
}

SynthData gen_dataset(const HierarchyDag& dag, const FeatureMatrix& prototypes, const SynthConfig& cfg) {
  validate(cfg);
  if (prototypes.rows() != static_cast<Eigen::Index>(dag.node_count()) || prototypes.dim() != cfg.dim) {
    fail(ErrorCode::DimMismatch, "prototype table does not match the hierarchy / dim");
  }

  std::vector<NodeId> leaves;
  for (std::size_t c = 0; c < dag.node_count(); ++c) {
    if (NodeId(c) != dag.root() && dag.is_leaf(NodeId(c))) leaves.emplace_back(c);
  }

  SynthData out;
  const auto n_images = static_cast<Eigen::Index>(leaves.size()) * cfg.images_per_class;
  out.images.images.values.resize(n_images, cfg.dim);
  out.images.images.owners.reserve(static_cast<std::size_t>(n_images));
  out.images.labels.reserve(static_cast<std::size_t>(n_images));
  const double unit_scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  Eigen::Index row = 0;
  for (NodeId leaf : leaves) {
    for (int i = 0; i < cfg.images_per_class; ++i, ++row) {
      CounterRng rng(derive_key({cfg.seed, kImageStream, leaf.value, static_cast<std::uint64_t>(i)}));
      Eigen::RowVectorXd x = prototypes.row(static_cast<Eigen::Index>(leaf.index()));
      for (int k = 0; k < cfg.dim; ++k) x[k] += cfg.sigma_image * unit_scale * rng.gaussian();
      out.images.images.values.row(row) = x.normalized();
      out.images.images.owners.push_back(static_cast<std::uint64_t>(row));
      out.images.labels.push_back(leaf);
    }
  }

  // Sibling groups: leaves sharing a shortest-path parent, ordered by parent id.
  std::vector<NodeId> parents;
  std::vector<std::vector<NodeId>> groups;
  for (NodeId leaf : leaves) {
    const NodeId p = dag.ancestor_path(leaf).back();
    auto it = std::lower_bound(parents.begin(), parents.end(), p);
    const auto at = it - parents.begin();
    if (it == parents.end() || *it != p) {
      parents.insert(it, p);
      groups.insert(groups.begin() + at, std::vector<NodeId>{});
    }
    groups[static_cast<std::size_t>(at)].push_back(leaf);
  }
  std::vector<int> sizes;
  for (const auto& grp : groups) sizes.push_back(static_cast<int>(grp.size()));
  const auto seen_counts = apportion_seen(sizes, cfg.seen_fraction, cfg.seed);

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto members = groups[gi];
    CounterRng rng(derive_key({cfg.seed, kSplitStream, parents[gi].value}));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (static_cast<int>(i) < seen_counts[gi] ? out.split.seen : out.split.unseen).push_back(members[i]);
    }
  }
  std::sort(out.split.seen.begin(), out.split.seen.end());
  std::sort(out.split.unseen.begin(), out.split.unseen.end());
  return out;
}

std::string format_synth_meta(const SynthConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "depth=" << cfg.depth << '\n'
     << "branching=" << cfg.branching << '\n'
     << "dim=" << cfg.dim << '\n'
     << "sigma_class=";
  for (std::size_t i = 0; i < cfg.sigma_class.size(); ++i) os << (i ? "," : "") << cfg.sigma_class[i];
  os << '\n'
     << "sigma_image=" << cfg.sigma_image << '\n'
     << "images_per_class=" << cfg.images_per_class << '\n'
     << "seen_fraction=" << cfg.seen_fraction << '\n'
     << "seed=" << cfg.seed << '\n';
  return os.str();
}

}  // namespace hgr
