#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgr/error.hpp"

namespace hgr {

/// Dense class index into a HierarchyDag.
struct NodeId {
  std::uint32_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}
  constexpr explicit NodeId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  constexpr auto operator<=>(const NodeId&) const = default;
};

/// One parenting relation: `parent` is the more abstract concept.
struct Edge {
  std::string child;
  std::string parent;

  bool operator==(const Edge&) const = default;
};

struct LoadOptions {
  std::optional<std::string> declared_root;
  bool prune_unreachable = false;
  /// Assign ids from sorted names instead of first appearance.
  bool stable_ids = false;
};

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<Edge> witness);
  const std::vector<Edge>& witness() const { return witness_; }

 private:
  std::vector<Edge> witness_;
};

class UnreachableError : public Error {
 public:
  explicit UnreachableError(std::vector<std::string> names);
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Name given to the root node added when several nodes have no parent.
inline constexpr const char* kSyntheticRootName = "<root>";

/// Immutable class taxonomy with precomputed shortest ancestor paths,
/// depths and sibling sets. Ancestor paths start at the root and stop at the
/// node's parent; among equally short paths the lexicographically smallest
/// id sequence is kept.
class HierarchyDag {
 public:
  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  NodeId root() const { return root_; }
  bool has_synthetic_root() const { return synthetic_root_; }

  const std::string& name(NodeId c) const;
  NodeId id_of(const std::string& name) const;
  std::optional<NodeId> find(const std::string& name) const;
  bool contains(NodeId c) const { return c.index() < names_.size(); }

  std::span<const NodeId> parents(NodeId c) const;
  std::span<const NodeId> children(NodeId c) const;
  bool is_leaf(NodeId c) const { return children(c).empty(); }

  int depth(NodeId c) const;
  int max_depth() const { return static_cast<int>(by_depth_.size()) - 1; }

  std::span<const NodeId> ancestor_path(NodeId c) const;
  /// Root-to-c path including c itself; entry k sits at depth k.
  std::vector<NodeId> path_to(NodeId c) const;
  std::span<const NodeId> siblings(NodeId c) const;
  std::span<const NodeId> nodes_at_depth(int level) const;

  /// Number of classes at each depth 1..max_depth (index 0 is depth 1).
  std::vector<std::size_t> class_counts_per_depth() const;

  /// Edges in id order of (child, parent), by name.
  std::vector<Edge> edges() const;

  /// Names dropped by prune_unreachable, in original appearance order.
  const std::vector<std::string>& pruned() const { return pruned_; }

 private:
  friend HierarchyDag load_hierarchy(std::span<const Edge>, const LoadOptions&);

  void check(NodeId c) const;

  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<int> depth_;
  std::vector<std::vector<NodeId>> ancestors_;
  std::vector<std::vector<NodeId>> siblings_;
  std::vector<std::vector<NodeId>> by_depth_;
  std::vector<std::string> pruned_;
  std::size_t edge_count_ = 0;
  NodeId root_;
  bool synthetic_root_ = false;
};

/// Builds and validates a taxonomy from (child, parent) name pairs.
HierarchyDag load_hierarchy(std::span<const Edge> edges, const LoadOptions& options = {});

/// Disjoint seen / unseen class sets, each sorted by id.
struct ClassSplit {
  std::vector<NodeId> seen;
  std::vector<NodeId> unseen;

  bool is_seen(NodeId c) const;
  bool is_unseen(NodeId c) const;
};

/// Throws InvalidInput when the sets overlap or contain the root.
void validate_split(const HierarchyDag& dag, const ClassSplit& split);

// Text formats: `child<TAB>parent` edges and `name<TAB>seen|unseen` splits,
// one record per line, '#' comment lines and blank lines ignored.
std::vector<Edge> parse_edge_list(std::istream& in);
std::vector<Edge> read_edge_list(const std::string& path);
void write_edge_list(const std::string& path, std::span<const Edge> edges);

ClassSplit parse_split(std::istream& in, const HierarchyDag& dag);
ClassSplit read_split(const std::string& path, const HierarchyDag& dag);
void write_split(const std::string& path, const HierarchyDag& dag, const ClassSplit& split);

}  // namespace hgr

template <>
struct std::hash<hgr::NodeId> {
  std::size_t operator()(hgr::NodeId id) const noexcept { return id.value; }
};
