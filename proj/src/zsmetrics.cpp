#include "hgr/zsmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace hgr {

CandidateMode parse_candidate_mode(const std::string& text) {
  if (text == "zsl") return CandidateMode::Zsl;
  if (text == "gzsl") return CandidateMode::Gzsl;
  fail(ErrorCode::Usage, "unknown candidate mode '" + text + "'");
}

std::string to_string(CandidateMode mode) { return mode == CandidateMode::Zsl ? "zsl" : "gzsl"; }

std::vector<NodeId> candidate_classes(const ClassSplit& split, CandidateMode mode) {
  std::vector<NodeId> out = split.unseen;
  if (mode == CandidateMode::Gzsl) {
    out.insert(out.end(), split.seen.begin(), split.seen.end());
    std::sort(out.begin(), out.end());
  }
  return out;
}

std::vector<NodeId> candidate_closure(const HierarchyDag& dag, std::span<const NodeId> candidates) {
  std::vector<NodeId> out;
  for (NodeId c : candidates) {
    for (NodeId a : dag.path_to(c)) {
      if (a != dag.root()) out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> rank_candidates(const Eigen::VectorXd& image_vec, std::span<const NodeId> candidates,
                                    const RowMatrixXd& class_features, double tau) {
  if (candidates.empty()) fail(ErrorCode::EmptyCandidates, "no candidate classes to rank");
  if (!(tau > 0.0)) fail(ErrorCode::NonPositiveTemperature, "temperature must be positive");
  if (image_vec.size() != class_features.cols()) fail(ErrorCode::DimMismatch, "image and class dims differ");
  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(candidates.size());
  for (NodeId c : candidates) {
    if (static_cast<Eigen::Index>(c.index()) >= class_features.rows()) {
      fail(ErrorCode::UnknownNode, "candidate without class features");
    }
    scored.emplace_back(class_features.row(c.index()).dot(image_vec) / tau, c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<NodeId> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

std::map<int, double> hit_at_k(std::span<const std::vector<NodeId>> rankings, std::span<const NodeId> labels,
                               std::span<const int> ks) {
  if (rankings.size() != labels.size()) fail(ErrorCode::DimMismatch, "one ranking per label required");
  std::map<int, double> out;
  for (int k : ks) {
    if (k < 1) fail(ErrorCode::InvalidInput, "k must be positive");
    out[k] = 0.0;
  }
  if (labels.empty()) return out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& r = rankings[i];
    const auto pos = static_cast<std::size_t>(std::find(r.begin(), r.end(), labels[i]) - r.begin());
    if (pos == r.size()) continue;
    for (auto& [k, hits] : out) {
      if (pos < static_cast<std::size_t>(k)) hits += 1.0;
    }
  }
  for (auto& [k, hits] : out) hits /= static_cast<double>(labels.size());
  return out;
}

double tor(const HierarchyDag& dag, std::span<const NodeId> predictions, NodeId label) {
  if (label == dag.root()) fail(ErrorCode::InvalidInput, "the root has no TOR");
  const auto path = dag.path_to(label);
  std::vector<NodeId> hits;
  for (NodeId p : predictions) {
    if (!dag.contains(p)) fail(ErrorCode::UnknownNode, "prediction refers to unknown class");
    if (p != dag.root() && std::find(path.begin(), path.end(), p) != path.end()) hits.push_back(p);
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return static_cast<double>(hits.size()) / dag.depth(label);
}

double tor(const HierarchyDag& dag, NodeId top1, NodeId label) {
  return tor(dag, std::span<const NodeId>(&top1, 1), label);
}

std::vector<NodeId> predict_layers(const HierarchyDag& dag, const Eigen::VectorXd& image_vec, NodeId label,
                                   const RowMatrixXd& class_features, std::span<const NodeId> closure) {
  const int q = dag.depth(label);
  std::vector<NodeId> out;
  for (int l = 1; l <= q; ++l) {
    bool found = false;
    double best = 0.0;
    NodeId arg;
    for (NodeId c : closure) {
      if (dag.depth(c) != l) continue;
      const double s = class_features.row(c.index()).dot(image_vec);
      if (!found || s > best) {
        best = s;
        arg = c;
        found = true;
      }
    }
    if (found) out.push_back(arg);
  }
  return out;
}

double por(const HierarchyDag& dag, const Eigen::VectorXd& image_vec, NodeId label, const RowMatrixXd& class_features,
           std::span<const NodeId> closure) {
  if (!dag.contains(label)) fail(ErrorCode::UnknownNode, "unknown label");
  if (label == dag.root()) fail(ErrorCode::InvalidInput, "the root has no POR");
  const auto path = dag.path_to(label);
  const auto predicted = predict_layers(dag, image_vec, label, class_features, closure);
  std::size_t hits = 0;
  for (NodeId p : predicted) hits += std::find(path.begin() + 1, path.end(), p) != path.end() ? 1 : 0;
  return static_cast<double>(hits) / dag.depth(label);
}

MetricReport evaluate(const HierarchyDag& dag, const Dataset& test, const ClassSplit& split,
                      const FeatureMatrix& class_features, double tau, const EvalOptions& options) {
  if (test.empty()) fail(ErrorCode::EmptyTestSet, "no test images");
  if (options.tor_topk < 1) fail(ErrorCode::InvalidInput, "tor top-k must be positive");
  validate_dataset(dag, test);
  if (class_features.rows() != static_cast<Eigen::Index>(dag.node_count())) {
    fail(ErrorCode::DimMismatch, "class features must have one row per node");
  }
  const auto candidates = candidate_classes(split, options.mode);
  if (candidates.empty()) fail(ErrorCode::EmptyCandidates, "candidate set is empty");
  const auto closure = candidate_closure(dag, candidates);
  for (NodeId c : test.labels) {
    if (!std::binary_search(candidates.begin(), candidates.end(), c)) {
      fail(ErrorCode::InvalidInput, "test label '" + dag.name(c) + "' is outside the " + to_string(options.mode) +
                                        " candidate set");
    }
  }

  MetricReport report;
  report.n_images = test.size();
  report.n_candidates = candidates.size();
  std::vector<std::vector<NodeId>> rankings;
  rankings.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::VectorXd v = test.images.values.row(static_cast<Eigen::Index>(i)).transpose();
    const NodeId label = test.labels[i];
    auto ranking = rank_candidates(v, candidates, class_features.values, tau);
    const auto topk = std::min<std::size_t>(ranking.size(), static_cast<std::size_t>(options.tor_topk));
    const double t = tor(dag, std::span<const NodeId>(ranking.data(), topk), label);
    const double p = por(dag, v, label, class_features.values, closure);
    report.tor += t;
    report.por += p;
    auto& ds = report.per_depth[dag.depth(label)];
    ++ds.n_images;
    ds.hit1 += ranking.front() == label ? 1.0 : 0.0;
    ds.tor += t;
    ds.por += p;
    rankings.push_back(std::move(ranking));
  }
  report.hit_at = hit_at_k(rankings, test.labels, options.ks);
  report.tor /= static_cast<double>(test.size());
  report.por /= static_cast<double>(test.size());
  for (auto& [d, ds] : report.per_depth) {
    const auto n = static_cast<double>(ds.n_images);
    ds.hit1 /= n;
    ds.tor /= n;
    ds.por /= n;
  }
  return report;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  os << "n_images=" << report.n_images << '\n';
  os << "n_candidates=" << report.n_candidates << '\n';
  for (const auto& [k, v] : report.hit_at) os << "hit@" << k << '=' << num(v) << '\n';
  os << "tor=" << num(report.tor) << '\n';
  os << "por=" << num(report.por) << '\n';
  os << '\n' << "depth\tn_images\thit@1\ttor\tpor\n";
  for (const auto& [d, ds] : report.per_depth) {
    os << d << '\t' << ds.n_images << '\t' << num(ds.hit1) << '\t' << num(ds.tor) << '\t' << num(ds.por) << '\n';
  }
  return os.str();
}

}  // namespace hgr
