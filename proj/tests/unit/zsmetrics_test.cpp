#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "hgr/rng.hpp"
#include "hgr/zsmetrics.hpp"
#include "oracles.hpp"

using namespace hgr;

namespace {

// Row i of an n x 2 table at cosine cos[i] to the image (1, 0).
RowMatrixXd at_cosines(const std::map<std::size_t, double>& cos, std::size_t n) {
  RowMatrixXd m(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) m.row(static_cast<Eigen::Index>(i)) << 0.0, 1.0;
  for (const auto& [i, c] : cos) m.row(static_cast<Eigen::Index>(i)) << c, std::sqrt(1.0 - c * c);
  return m;
}

const Eigen::Vector2d kImage(1.0, 0.0);

}  // namespace

TEST_CASE("ranking order and tie-break") {
  const auto table = at_cosines({{7, 0.9}, {3, 0.9}, {1, 0.2}, {2, -0.1}}, 8);
  const std::vector<NodeId> cand{NodeId(7u), NodeId(3u), NodeId(1u), NodeId(2u)};
  CHECK(rank_candidates(kImage, cand, table) == std::vector<NodeId>{NodeId(3u), NodeId(7u), NodeId(1u), NodeId(2u)});
  CHECK(rank_candidates(kImage, cand, table, 0.01) == rank_candidates(kImage, cand, table, 1.0));

  const std::vector<NodeId> one{NodeId(2u)};
  CHECK(rank_candidates(kImage, one, table) == one);
  CHECK_THROWS_AS(rank_candidates(kImage, {}, table), Error);

  const auto exact = at_cosines({{4, 1.0}, {5, 0.0}, {6, 0.0}}, 8);
  const std::vector<NodeId> c3{NodeId(5u), NodeId(6u), NodeId(4u)};
  CHECK(rank_candidates(kImage, c3, exact).front() == NodeId(4u));
}

TEST_CASE("hit at k") {
  const std::vector<int> ks{1, 2, 5};
  const std::vector<NodeId> labels{NodeId(1u), NodeId(1u)};
  const std::vector<std::vector<NodeId>> first{{NodeId(1u), NodeId(2u)}, {NodeId(1u), NodeId(3u)}};
  CHECK(hit_at_k(first, labels, ks).at(1) == 1.0);

  const std::vector<std::vector<NodeId>> third(2, {NodeId(4u), NodeId(5u), NodeId(1u), NodeId(6u)});
  const auto h = hit_at_k(third, labels, ks);
  CHECK(h.at(2) == 0.0);
  CHECK(h.at(5) == 1.0);

  // Ten images, label ranks 1,2,3,4,5,1,7,2,9,10 in rankings of length 10.
  const int ranks[] = {1, 2, 3, 4, 5, 1, 7, 2, 9, 10};
  std::vector<std::vector<NodeId>> rankings;
  std::vector<NodeId> lab;
  for (int r : ranks) {
    std::vector<NodeId> rk;
    for (std::uint32_t i = 0; i < 10; ++i) rk.push_back(NodeId(100u + i));
    rk[static_cast<std::size_t>(r - 1)] = NodeId(1u);
    rankings.push_back(rk);
    lab.push_back(NodeId(1u));
  }
  const std::vector<int> all{1, 2, 3, 5, 10};
  const auto mixed = hit_at_k(rankings, lab, all);
  for (int k : all) {
    int count = 0;
    for (int r : ranks) count += r <= k ? 1 : 0;
    CHECK(mixed.at(k) == count / 10.0);
  }
}

TEST_CASE("hit at k is monotone on random rankings") {
  CounterRng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(15);
    std::vector<std::vector<NodeId>> rankings;
    std::vector<NodeId> labels;
    for (int i = 0; i < 5; ++i) {
      std::vector<NodeId> r;
      for (std::size_t c = 0; c < n; ++c) r.push_back(NodeId(c));
      for (std::size_t c = n; c > 1; --c) std::swap(r[c - 1], r[rng.below(c)]);
      rankings.push_back(r);
      labels.push_back(NodeId(rng.below(n)));
    }
    std::vector<int> ks;
    for (int k = 1; k <= static_cast<int>(n); ++k) ks.push_back(k);
    const auto h = hit_at_k(rankings, labels, ks);
    for (int k = 1; k < static_cast<int>(n); ++k) CHECK(h.at(k) <= h.at(k + 1));
    CHECK(h.at(static_cast<int>(n)) == 1.0);
  }
}

TEST_CASE("tor") {
  const auto dag = load_hierarchy(fixture::eight_node_edges());
  const NodeId F = dag.id_of("F");
  CHECK(tor(dag, F, F) == doctest::Approx(1.0 / 3.0));
  CHECK(tor(dag, dag.id_of("C"), F) == doctest::Approx(1.0 / 3.0));
  CHECK(tor(dag, dag.id_of("E"), F) == 0.0);
  CHECK(tor(dag, dag.id_of("G"), F) == 0.0);
  const std::vector<NodeId> top3{dag.id_of("G"), dag.id_of("C"), dag.id_of("A")};
  CHECK(tor(dag, top3, F) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(tor(dag, F, dag.root()), Error);
}

TEST_CASE("por against the per-level argmax oracle") {
  const auto dag = load_hierarchy(fixture::eight_node_edges());
  const auto tree = fixture::eight_node_tree();
  const auto emb = fixture::embeddings(dag);
  const FeatureMatrix feats = l2_normalize(FeatureMatrix(std::vector<std::uint64_t>(dag.node_count(), 0),
                                                         fixture::class_table(dag)));
  std::map<std::string, int> order;
  for (std::size_t i = 0; i < dag.node_count(); ++i) order[dag.name(NodeId(i))] = static_cast<int>(i);

  CounterRng rng(3);
  const std::vector<std::vector<std::string>> candidate_sets{
      {"F", "G", "D", "E"}, {"F", "G"}, {"D", "E"}, {"F", "D"}, {"G", "E", "D", "F"}};
  for (const auto& names : candidate_sets) {
    std::vector<NodeId> cand;
    for (const auto& n : names) cand.push_back(dag.id_of(n));
    std::sort(cand.begin(), cand.end());
    const auto closure = candidate_closure(dag, cand);
    std::vector<std::string> closure_names;
    for (NodeId c : closure) closure_names.push_back(dag.name(c));
    for (int trial = 0; trial < 40; ++trial) {
      oracle::Vec img(fixture::kDim);
      for (double& x : img) x = rng.gaussian();
      const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(oracle::unit(img).data(), fixture::kDim);
      for (const auto& label : names) {
        const double expect = oracle::por(tree, emb, img, label, closure_names, order);
        CHECK(por(dag, v, dag.id_of(label), feats.values, closure) == expect);
      }
    }
  }
}

TEST_CASE("por corner cases") {
  // Chain R - a - b - c - d plus decoys at each depth.
  const auto dag = load_hierarchy(std::vector<Edge>{
      {"a", "R"}, {"b", "a"}, {"c", "b"}, {"d", "c"}, {"a2", "R"}, {"b2", "a"}, {"c2", "b2"}, {"d2", "c2"}});
  const auto n = dag.node_count();
  std::map<std::size_t, double> good, half;
  for (const char* x : {"a", "b", "c", "d"}) good[dag.id_of(x).index()] = 0.9;
  for (const char* x : {"a2", "b2", "c2", "d2"}) good[dag.id_of(x).index()] = 0.1;
  half = good;
  half[dag.id_of("c").index()] = 0.0;
  half[dag.id_of("d").index()] = 0.0;
  std::vector<NodeId> cand{dag.id_of("d"), dag.id_of("d2")};
  std::sort(cand.begin(), cand.end());
  const auto closure = candidate_closure(dag, cand);
  CHECK(por(dag, kImage, dag.id_of("d"), at_cosines(good, n), closure) == 1.0);
  CHECK(por(dag, kImage, dag.id_of("d"), at_cosines(half, n), closure) == 0.5);
}

TEST_CASE("evaluate") {
  const auto dag = load_hierarchy(std::vector<Edge>{{"a", "R"}, {"b", "R"}, {"a1", "a"}, {"b1", "b"}});
  const auto n = dag.node_count();
  const auto table =
      at_cosines({{dag.id_of("a1").index(), 0.95}, {dag.id_of("b1").index(), 0.3}, {dag.id_of("a").index(), 0.2},
                  {dag.id_of("b").index(), 0.6}},
                 n);
  std::vector<std::uint64_t> owners(n);
  const FeatureMatrix feats(owners, table);
  ClassSplit split{{}, {dag.id_of("a1"), dag.id_of("b1")}};
  std::sort(split.unseen.begin(), split.unseen.end());
  Dataset test;
  test.images = FeatureMatrix({0}, RowMatrixXd(kImage.transpose()));
  test.labels = {dag.id_of("a1")};

  const auto r = evaluate(dag, test, split, feats, 0.07, {});
  CHECK(r.hit_at.at(1) == 1.0);
  CHECK(r.tor == 0.5);
  // depth 1 argmax is b, depth 2 argmax is a1
  CHECK(r.por == 0.5);
  CHECK(r.n_images == 1);
  CHECK(r.n_candidates == 2);
  CHECK(r == evaluate(dag, test, split, feats, 3.0, {}));
  CHECK_FALSE(format_report(r).empty());

  try {
    evaluate(dag, Dataset{}, split, feats, 0.07, {});
    FAIL("empty test set accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTestSet);
  }
}

TEST_CASE("report fields stay in range on random inputs") {
  const auto dag = load_hierarchy(fixture::eight_node_edges());
  CounterRng rng(15);
  const auto feats = random_class_table(dag.node_count(), 4, 1);
  ClassSplit split{{dag.id_of("D")}, {dag.id_of("E"), dag.id_of("F"), dag.id_of("G")}};
  std::sort(split.unseen.begin(), split.unseen.end());
  Dataset test;
  test.images.values.resize(30, 4);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (int k = 0; k < 4; ++k) test.images.values(i, k) = rng.gaussian();
    test.images.values.row(i).normalize();
    test.images.owners.push_back(static_cast<std::uint64_t>(i));
    test.labels.push_back(split.unseen[rng.below(3)]);
  }
  for (CandidateMode mode : {CandidateMode::Zsl, CandidateMode::Gzsl}) {
    EvalOptions opt;
    opt.mode = mode;
    const auto r = evaluate(dag, test, split, feats, 1.0, opt);
    double prev = 0.0;
    for (const auto& [k, h] : r.hit_at) {
      CHECK(h >= prev);
      CHECK(h <= 1.0);
      prev = h;
    }
    CHECK(r.tor >= 0.0);
    CHECK(r.tor <= 1.0);
    CHECK(r.por >= 0.0);
    CHECK(r.por <= 1.0);
  }
}
