#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "hgr/hierarchy.hpp"
#include "hgr/rng.hpp"
#include "test_util.hpp"

using namespace hgr;

namespace {

std::vector<std::string> names_of(const HierarchyDag& dag, std::span<const NodeId> ids) {
  std::vector<std::string> out;
  for (NodeId c : ids) out.push_back(dag.name(c));
  return out;
}

std::set<std::string> name_set(const HierarchyDag& dag, std::span<const NodeId> ids) {
  const auto v = names_of(dag, ids);
  return {v.begin(), v.end()};
}

bool has_edge(const HierarchyDag& dag, NodeId parent, NodeId child) {
  const auto ps = dag.parents(child);
  return std::find(ps.begin(), ps.end(), parent) != ps.end();
}

// All shortest root-to-c paths by exhaustive BFS layering; returns the
// lexicographically smallest id sequence.
std::vector<NodeId> brute_shortest_path(const HierarchyDag& dag, NodeId c) {
  std::vector<std::vector<NodeId>> frontier{{dag.root()}};
  while (true) {
    std::vector<std::vector<NodeId>> hits;
    for (const auto& p : frontier) {
      if (p.back() == c) hits.push_back(p);
    }
    if (!hits.empty()) {
      auto best = *std::min_element(hits.begin(), hits.end());
      best.pop_back();
      return best;
    }
    std::vector<std::vector<NodeId>> next;
    for (const auto& p : frontier) {
      for (NodeId ch : dag.children(p.back())) {
        auto q = p;
        q.push_back(ch);
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace

TEST_CASE("chain depths with a declared root") {
  const std::vector<Edge> edges{{"A", "R"}, {"B", "A"}, {"D", "B"}};
  const auto dag = load_hierarchy(edges, {.declared_root = "R"});
  CHECK(dag.depth(dag.id_of("R")) == 0);
  CHECK(dag.depth(dag.id_of("A")) == 1);
  CHECK(dag.depth(dag.id_of("B")) == 2);
  CHECK(dag.depth(dag.id_of("D")) == 3);
  CHECK(names_of(dag, dag.ancestor_path(dag.id_of("D"))) == std::vector<std::string>{"R", "A", "B"});
  CHECK(dag.ancestor_path(dag.root()).empty());
  CHECK(name_set(dag, dag.nodes_at_depth(2)) == std::set<std::string>{"B"});
  CHECK_FALSE(dag.has_synthetic_root());
}

TEST_CASE("hunting dog sits at depth four") {
  const std::vector<Edge> edges{{"Animal", "Root"},
                                {"Domestic Animal", "Animal"},
                                {"Dog", "Domestic Animal"},
                                {"Hunting Dog", "Dog"}};
  const auto dag = load_hierarchy(edges);
  CHECK(dag.name(dag.root()) == "Root");
  CHECK(dag.depth(dag.id_of("Hunting Dog")) == 4);
}

TEST_CASE("two-cycle is reported with its edges") {
  const std::vector<Edge> edges{{"A", "B"}, {"B", "A"}};
  try {
    load_hierarchy(edges);
    FAIL("expected a cycle error");
  } catch (const CycleError& e) {
    CHECK(e.code() == ErrorCode::CycleDetected);
    CHECK(e.witness() == std::vector<Edge>{{"A", "B"}, {"B", "A"}});
  }
}

TEST_CASE("longer cycle witness closes on itself") {
  const std::vector<Edge> edges{{"A", "R"}, {"B", "A"}, {"C", "B"}, {"A", "C"}};
  try {
    load_hierarchy(edges);
    FAIL("expected a cycle error");
  } catch (const CycleError& e) {
    const auto& w = e.witness();
    REQUIRE(w.size() == 3);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i].parent == w[(i + 1) % w.size()].child);
  }
}

TEST_CASE("diamond keeps the path through the smaller id") {
  const std::vector<Edge> edges{{"A", "R"}, {"B", "R"}, {"C", "A"}, {"C", "B"}};
  const auto dag = load_hierarchy(edges);
  REQUIRE(dag.id_of("A") < dag.id_of("B"));
  CHECK(names_of(dag, dag.ancestor_path(dag.id_of("C"))) == std::vector<std::string>{"R", "A"});
  CHECK(std::vector<NodeId>(dag.ancestor_path(dag.id_of("C")).begin(), dag.ancestor_path(dag.id_of("C")).end()) ==
        brute_shortest_path(dag, dag.id_of("C")));
}

TEST_CASE("siblings") {
  const std::vector<Edge> flat{{"A", "R"}, {"B", "R"}, {"C", "R"}, {"D", "A"}};
  const auto dag = load_hierarchy(flat);
  CHECK(name_set(dag, dag.siblings(dag.id_of("A"))) == std::set<std::string>{"B", "C"});
  CHECK(dag.siblings(dag.id_of("D")).empty());

  const std::vector<Edge> multi{{"P1", "R"}, {"P2", "R"}, {"c", "P1"}, {"x", "P1"}, {"c", "P2"}, {"y", "P2"}};
  const auto m = load_hierarchy(multi);
  CHECK(name_set(m, m.siblings(m.id_of("c"))) == std::set<std::string>{"x", "y"});
}

TEST_CASE("balanced ternary tree has nine nodes at depth two") {
  std::vector<Edge> edges;
  for (int a = 0; a < 3; ++a) {
    edges.push_back({"n" + std::to_string(a), "r"});
    for (int b = 0; b < 3; ++b) edges.push_back({"n" + std::to_string(a) + std::to_string(b), "n" + std::to_string(a)});
  }
  const auto dag = load_hierarchy(edges);
  CHECK(dag.nodes_at_depth(0).size() == 1);
  CHECK(dag.nodes_at_depth(2).size() == 9);
  CHECK(dag.class_counts_per_depth() == std::vector<std::size_t>{3, 9});
  CHECK_THROWS_AS(dag.nodes_at_depth(3), Error);
  CHECK_THROWS_AS(dag.nodes_at_depth(-1), Error);
}

TEST_CASE("several sources get a synthetic root") {
  const std::vector<Edge> edges{{"a", "X"}, {"b", "Y"}};
  const auto dag = load_hierarchy(edges);
  CHECK(dag.has_synthetic_root());
  CHECK(dag.name(dag.root()) == kSyntheticRootName);
  CHECK(dag.root().index() == dag.node_count() - 1);
  CHECK(dag.depth(dag.id_of("X")) == 1);
  CHECK(dag.depth(dag.id_of("b")) == 2);
  CHECK(dag.edge_count() == 4);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(load_hierarchy(std::vector<Edge>{}), Error);
  try {
    load_hierarchy(std::vector<Edge>{{"A", "A"}});
    FAIL("self edge accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SelfEdge);
  }
  try {
    load_hierarchy(std::vector<Edge>{{"A", "R"}, {"A", "R"}});
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateEdge);
  }
  try {
    load_hierarchy(std::vector<Edge>{{"", "R"}});
    FAIL("empty name accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}

TEST_CASE("unreachable nodes are an error unless pruned") {
  // With R declared, the component {U, V} hangs off nothing reachable.
  const std::vector<Edge> edges{{"A", "R"}, {"V", "U"}};
  try {
    load_hierarchy(edges, {.declared_root = "R"});
    FAIL("unreachable accepted");
  } catch (const UnreachableError& e) {
    CHECK(e.code() == ErrorCode::UnreachableNodes);
    CHECK(e.names() == std::vector<std::string>{"V", "U"});
  }
  const auto dag = load_hierarchy(edges, {.declared_root = "R", .prune_unreachable = true});
  CHECK(dag.node_count() == 2);
  CHECK(dag.pruned() == std::vector<std::string>{"V", "U"});
  CHECK_FALSE(dag.find("U").has_value());
}

TEST_CASE("structural invariants on random DAGs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto dag = load_hierarchy(testutil::random_dag(seed, 40));
    std::size_t total = 0;
    for (int l = 0; l <= dag.max_depth(); ++l) total += dag.nodes_at_depth(l).size();
    CHECK(total == dag.node_count());
    for (std::size_t i = 0; i < dag.node_count(); ++i) {
      const NodeId c(i);
      const auto path = dag.ancestor_path(c);
      CHECK(static_cast<int>(path.size()) == dag.depth(c));
      if (c == dag.root()) continue;
      CHECK(path.front() == dag.root());
      for (std::size_t k = 0; k + 1 < path.size(); ++k) CHECK(has_edge(dag, path[k], path[k + 1]));
      CHECK(has_edge(dag, path.back(), c));
      CHECK(std::vector<NodeId>(path.begin(), path.end()) == brute_shortest_path(dag, c));
      for (NodeId p : dag.parents(c)) CHECK(dag.depth(c) <= dag.depth(p) + 1);
      for (NodeId s : dag.siblings(c)) {
        CHECK(s != c);
        const auto back = dag.siblings(s);
        CHECK(std::find(back.begin(), back.end(), c) != back.end());
      }
    }
  }
}

TEST_CASE("stable ids make queries independent of edge order") {
  auto edges = testutil::random_dag(7, 30);
  const auto a = load_hierarchy(edges, {.stable_ids = true});
  CounterRng rng(99);
  for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng.below(i)]);
  const auto b = load_hierarchy(edges, {.stable_ids = true});
  REQUIRE(a.node_count() == b.node_count());
  for (std::size_t i = 0; i < a.node_count(); ++i) {
    const NodeId c(i);
    CHECK(a.name(c) == b.name(c));
    CHECK(a.depth(c) == b.depth(c));
    CHECK(names_of(a, a.ancestor_path(c)) == names_of(b, b.ancestor_path(c)));
    CHECK(name_set(a, a.siblings(c)) == name_set(b, b.siblings(c)));
  }
}

TEST_CASE("edge list text format") {
  std::istringstream in("# taxonomy\nA\tR\n\nB\tA\n");
  const auto edges = parse_edge_list(in);
  CHECK(edges == std::vector<Edge>{{"A", "R"}, {"B", "A"}});
  std::istringstream bad("A R\n");
  CHECK_THROWS_AS(parse_edge_list(bad), Error);
}

TEST_CASE("split parsing and validation") {
  const auto dag = load_hierarchy(std::vector<Edge>{{"A", "R"}, {"B", "R"}});
  std::istringstream in("A\tseen\nB\tunseen\n");
  const auto split = parse_split(in, dag);
  CHECK(split.is_seen(dag.id_of("A")));
  CHECK(split.is_unseen(dag.id_of("B")));
  CHECK_NOTHROW(validate_split(dag, split));
  ClassSplit overlap{{dag.id_of("A")}, {dag.id_of("A")}};
  CHECK_THROWS_AS(validate_split(dag, overlap), Error);
  ClassSplit with_root{{dag.root()}, {}};
  CHECK_THROWS_AS(validate_split(dag, with_root), Error);
}
