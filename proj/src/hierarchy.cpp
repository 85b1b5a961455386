#include "hgr/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace hgr {
namespace {

std::string describe_cycle(const std::vector<Edge>& witness) {
  std::ostringstream os;
  os << "cycle detected:";
  for (const auto& e : witness) os << " (" << e.child << " -> " << e.parent << ")";
  return os.str();
}

std::string describe_unreachable(const std::vector<std::string>& names) {
  std::ostringstream os;
  os << names.size() << " node(s) unreachable from root:";
  for (std::size_t i = 0; i < names.size() && i < 20; ++i) os << ' ' << names[i];
  if (names.size() > 20) os << " ...";
  return os.str();
}

// Follows child -> parent edges; a back edge closes a cycle. The witness
// lists the edges along the DFS stack from the re-entered node.
std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> find_cycle(
    const std::vector<std::vector<NodeId>>& parents) {
  const std::size_t n = parents.size();
  enum : char { kWhite, kGrey, kBlack };
  std::vector<char> color(n, kWhite);
  struct Frame {
    std::uint32_t node;
    std::size_t next;
  };
  for (std::uint32_t start = 0; start < n; ++start) {
    if (color[start] != kWhite) continue;
    std::vector<Frame> stack{{start, 0}};
    color[start] = kGrey;
    while (!stack.empty()) {
      Frame& top = stack.back();
      const auto& ps = parents[top.node];
      if (top.next == ps.size()) {
        color[top.node] = kBlack;
        stack.pop_back();
        continue;
      }
      const std::uint32_t p = ps[top.next++].value;
      if (color[p] == kGrey) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> witness;
        auto it = std::find_if(stack.begin(), stack.end(),
                               [p](const Frame& f) { return f.node == p; });
        for (; it != stack.end(); ++it) {
          const std::uint32_t to =
              (it + 1 == stack.end()) ? p : (it + 1)->node;
          witness.emplace_back(it->node, to);
        }
        return witness;
      }
      if (color[p] == kWhite) {
        color[p] = kGrey;
        stack.push_back({p, 0});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

CycleError::CycleError(std::vector<Edge> witness)
    : Error(ErrorCode::CycleDetected, describe_cycle(witness)),
      witness_(std::move(witness)) {}

UnreachableError::UnreachableError(std::vector<std::string> names)
    : Error(ErrorCode::UnreachableNodes, describe_unreachable(names)),
      names_(std::move(names)) {}

void HierarchyDag::check(NodeId c) const {
  if (!contains(c)) fail(ErrorCode::UnknownNode, "unknown node id " + std::to_string(c.value));
}

const std::string& HierarchyDag::name(NodeId c) const {
  check(c);
  return names_[c.index()];
}

NodeId HierarchyDag::id_of(const std::string& name) const {
  auto found = find(name);
  if (!found) fail(ErrorCode::UnknownNode, "unknown node '" + name + "'");
  return *found;
}

std::optional<NodeId> HierarchyDag::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const NodeId> HierarchyDag::parents(NodeId c) const {
  check(c);
  return parents_[c.index()];
}

std::span<const NodeId> HierarchyDag::children(NodeId c) const {
  check(c);
  return children_[c.index()];
}

int HierarchyDag::depth(NodeId c) const {
  check(c);
  return depth_[c.index()];
}

std::span<const NodeId> HierarchyDag::ancestor_path(NodeId c) const {
  check(c);
  return ancestors_[c.index()];
}

std::vector<NodeId> HierarchyDag::path_to(NodeId c) const {
  auto anc = ancestor_path(c);
  std::vector<NodeId> path(anc.begin(), anc.end());
  path.push_back(c);
  return path;
}

std::span<const NodeId> HierarchyDag::siblings(NodeId c) const {
  check(c);
  return siblings_[c.index()];
}

std::span<const NodeId> HierarchyDag::nodes_at_depth(int level) const {
  if (level < 0 || level > max_depth()) {
    fail(ErrorCode::DepthOutOfRange, "depth " + std::to_string(level) + " outside [0, " +
                                         std::to_string(max_depth()) + "]");
  }
  return by_depth_[static_cast<std::size_t>(level)];
}

std::vector<std::size_t> HierarchyDag::class_counts_per_depth() const {
  std::vector<std::size_t> counts;
  for (int l = 1; l <= max_depth(); ++l) counts.push_back(by_depth_[l].size());
  return counts;
}

std::vector<Edge> HierarchyDag::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t c = 0; c < names_.size(); ++c) {
    for (NodeId p : parents_[c]) out.push_back({names_[c], names_[p.index()]});
  }
  return out;
}

HierarchyDag load_hierarchy(std::span<const Edge> edges, const LoadOptions& options) {
  if (edges.empty()) fail(ErrorCode::EmptyInput, "edge list is empty");

  std::vector<std::string> names;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](const std::string& n) {
    auto [it, inserted] = index.try_emplace(n, NodeId(names.size()));
    if (inserted) names.push_back(n);
    return it->second;
  };

  for (const auto& e : edges) {
    if (e.child.empty() || e.parent.empty()) fail(ErrorCode::InvalidInput, "empty node name in edge list");
    if (e.child == e.parent) fail(ErrorCode::SelfEdge, "self edge on '" + e.child + "'");
    intern(e.child);
    intern(e.parent);
  }
  if (options.stable_ids) {
    std::sort(names.begin(), names.end());
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = NodeId(i);
  }

  std::optional<NodeId> declared;
  if (options.declared_root) {
    auto it = index.find(*options.declared_root);
    if (it == index.end()) fail(ErrorCode::UnknownNode, "declared root '" + *options.declared_root + "' not in edge list");
    declared = it->second;
  }

  const std::size_t n = names.size();
  std::vector<std::vector<NodeId>> parents(n), children(n);
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen_edges;
  for (const auto& e : edges) {
    const NodeId c = index.at(e.child), p = index.at(e.parent);
    if (!seen_edges.emplace(c.value, p.value).second) {
      fail(ErrorCode::DuplicateEdge, "duplicate edge (" + e.child + ", " + e.parent + ")");
    }
    parents[c.index()].push_back(p);
    children[p.index()].push_back(c);
  }

  if (auto cycle = find_cycle(parents)) {
    std::vector<Edge> witness;
    for (auto [c, p] : *cycle) witness.push_back({names[c], names[p]});
    throw CycleError(std::move(witness));
  }

  NodeId root;
  bool synthetic = false;
  if (declared) {
    if (!parents[declared->index()].empty()) {
      fail(ErrorCode::InvalidInput, "declared root '" + names[declared->index()] + "' has parents");
    }
    root = *declared;
  } else {
    std::vector<NodeId> sources;
    for (std::size_t i = 0; i < n; ++i) {
      if (parents[i].empty()) sources.emplace_back(i);
    }
    if (sources.size() == 1) {
      root = sources.front();
    } else {
      if (index.count(kSyntheticRootName)) {
        fail(ErrorCode::InvalidInput, std::string("node name '") + kSyntheticRootName + "' is reserved");
      }
      root = NodeId(n);
      synthetic = true;
      names.emplace_back(kSyntheticRootName);
      index.emplace(kSyntheticRootName, root);
      parents.emplace_back();
      children.push_back(sources);
      for (NodeId s : sources) parents[s.index()].push_back(root);
    }
  }

  const std::size_t total = names.size();
  std::vector<int> depth(total, -1);
  std::vector<NodeId> order;
  order.reserve(total);
  {
    std::queue<NodeId> frontier;
    frontier.push(root);
    depth[root.index()] = 0;
    while (!frontier.empty()) {
      NodeId u = frontier.front();
      frontier.pop();
      order.push_back(u);
      for (NodeId v : children[u.index()]) {
        if (depth[v.index()] < 0) {
          depth[v.index()] = depth[u.index()] + 1;
          frontier.push(v);
        }
      }
    }
  }

  if (order.size() != total) {
    std::vector<std::string> lost;
    for (std::size_t i = 0; i < total; ++i) {
      if (depth[i] < 0) lost.push_back(names[i]);
    }
    if (!options.prune_unreachable) throw UnreachableError(std::move(lost));

    std::vector<Edge> kept;
    for (const auto& e : edges) {
      if (depth[index.at(e.child).index()] >= 0 && depth[index.at(e.parent).index()] >= 0) kept.push_back(e);
    }
    LoadOptions again = options;
    again.prune_unreachable = false;
    // Only a declared root can leave nodes unreachable.
    again.declared_root = names[root.index()];
    HierarchyDag pruned = load_hierarchy(kept, again);
    pruned.pruned_ = std::move(lost);
    return pruned;
  }

  HierarchyDag dag;
  dag.root_ = root;
  dag.synthetic_root_ = synthetic;
  dag.edge_count_ = seen_edges.size() + (synthetic ? children[root.index()].size() : 0);

  // BFS order guarantees every shortest-path parent is finalized first.
  std::vector<std::vector<NodeId>> ancestors(total);
  for (NodeId u : order) {
    if (u == root) continue;
    const int want = depth[u.index()] - 1;
    const std::vector<NodeId>* best = nullptr;
    NodeId best_parent;
    for (NodeId p : parents[u.index()]) {
      if (depth[p.index()] != want) continue;
      const auto& cand = ancestors[p.index()];
      if (best == nullptr || std::tie(cand, p) < std::tie(*best, best_parent)) {
        best = &cand;
        best_parent = p;
      }
    }
    ancestors[u.index()] = *best;
    ancestors[u.index()].push_back(best_parent);
  }

  std::vector<std::vector<NodeId>> siblings(total);
  for (std::size_t c = 0; c < total; ++c) {
    auto& sib = siblings[c];
    for (NodeId p : parents[c]) {
      for (NodeId x : children[p.index()]) {
        if (x.index() != c) sib.push_back(x);
      }
    }
    std::sort(sib.begin(), sib.end());
    sib.erase(std::unique(sib.begin(), sib.end()), sib.end());
  }

  const int max_depth = *std::max_element(depth.begin(), depth.end());
  std::vector<std::vector<NodeId>> by_depth(static_cast<std::size_t>(max_depth) + 1);
  for (std::size_t c = 0; c < total; ++c) by_depth[depth[c]].emplace_back(c);

  dag.names_ = std::move(names);
  dag.index_ = std::move(index);
  dag.parents_ = std::move(parents);
  dag.children_ = std::move(children);
  dag.depth_ = std::move(depth);
  dag.ancestors_ = std::move(ancestors);
  dag.siblings_ = std::move(siblings);
  dag.by_depth_ = std::move(by_depth);
  return dag;
}

bool ClassSplit::is_seen(NodeId c) const { return std::binary_search(seen.begin(), seen.end(), c); }
bool ClassSplit::is_unseen(NodeId c) const { return std::binary_search(unseen.begin(), unseen.end(), c); }

void validate_split(const HierarchyDag& dag, const ClassSplit& split) {
  for (const auto* set : {&split.seen, &split.unseen}) {
    if (!std::is_sorted(set->begin(), set->end()) ||
        std::adjacent_find(set->begin(), set->end()) != set->end()) {
      fail(ErrorCode::InvalidInput, "split sets must be sorted and duplicate-free");
    }
    for (NodeId c : *set) {
      if (!dag.contains(c)) fail(ErrorCode::UnknownNode, "split references unknown node");
      if (c == dag.root()) fail(ErrorCode::InvalidInput, "root cannot be a seen or unseen class");
    }
  }
  for (NodeId c : split.seen) {
    if (split.is_unseen(c)) fail(ErrorCode::InvalidInput, "class '" + dag.name(c) + "' is both seen and unseen");
  }
}

namespace {

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos;
}

std::pair<std::string, std::string> split_tab(const std::string& raw, std::size_t line_no) {
  std::string line = raw;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
    fail(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": expected exactly two tab-separated fields");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

}  // namespace

std::vector<Edge> parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto [child, parent] = split_tab(line, line_no);
    edges.push_back({std::move(child), std::move(parent)});
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::string& path) {
  auto in = open_in(path);
  return parse_edge_list(in);
}

void write_edge_list(const std::string& path, std::span<const Edge> edges) {
  auto out = open_out(path);
  for (const auto& e : edges) out << e.child << '\t' << e.parent << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

ClassSplit parse_split(std::istream& in, const HierarchyDag& dag) {
  ClassSplit split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto [name, tag] = split_tab(line, line_no);
    const NodeId c = dag.id_of(name);
    if (tag == "seen") {
      split.seen.push_back(c);
    } else if (tag == "unseen") {
      split.unseen.push_back(c);
    } else {
      fail(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": split tag must be seen or unseen");
    }
  }
  std::sort(split.seen.begin(), split.seen.end());
  std::sort(split.unseen.begin(), split.unseen.end());
  validate_split(dag, split);
  return split;
}

ClassSplit read_split(const std::string& path, const HierarchyDag& dag) {
  auto in = open_in(path);
  return parse_split(in, dag);
}

void write_split(const std::string& path, const HierarchyDag& dag, const ClassSplit& split) {
  auto out = open_out(path);
  for (NodeId c : split.seen) out << dag.name(c) << "\tseen\n";
  for (NodeId c : split.unseen) out << dag.name(c) << "\tunseen\n";
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace hgr
