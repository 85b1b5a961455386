#include "hgr/hgrloss.hpp"

#include <thread>

#include "hgr/rng.hpp"

namespace hgr {

RangeConvention parse_range_convention(const std::string& text) {
  if (text == "algorithmic") return RangeConvention::Algorithmic;
  if (text == "ablation") return RangeConvention::Ablation;
  fail(ErrorCode::Usage, "unknown range convention '" + text + "'");
}

std::string to_string(RangeConvention c) {
  return c == RangeConvention::Algorithmic ? "algorithmic" : "ablation";
}

LossVariant parse_loss_variant(const std::string& text) {
  if (text == "full") return LossVariant::Full;
  if (text == "outer-only") return LossVariant::OuterOnly;
  if (text == "inner-only") return LossVariant::InnerOnly;
  if (text == "flat") return LossVariant::Flat;
  fail(ErrorCode::Usage, "unknown loss variant '" + text + "'");
}

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::Full: return "full";
    case LossVariant::OuterOnly: return "outer-only";
    case LossVariant::InnerOnly: return "inner-only";
    case LossVariant::Flat: return "flat";
  }
  return "?";
}

namespace {

// Products like 0.7 * 10 land a hair above the integer; snap those first.
constexpr double kRatioSlack = 1e-9;

LevelRange level_range(double ratio, int depth, RangeConvention convention) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) fail(ErrorCode::InvalidRatio, "loop ratio must lie in [0, 1]");
  if (depth < 1) fail(ErrorCode::InvalidInput, "loop range needs depth >= 1");
  const double scaled = ratio * depth;
  int start = 0;
  if (convention == RangeConvention::Algorithmic) {
    start = static_cast<int>(std::ceil(scaled - kRatioSlack));
  } else {
    start = depth - static_cast<int>(std::floor(scaled + kRatioSlack));
  }
  return {std::clamp(start, 1, depth), depth};
}

struct PairWork {
  int outer = 0;
  int inner = 0;
  NodeId positive;
  NodeId anchor;
  std::vector<NodeId> negatives;
  double pos_sim = 0.0;
  Eigen::VectorXd neg_sims;
  Eigen::VectorXd probs;  // softmax over [pos, negs...]
  double value = 0.0;
};

void evaluate_pair(PairWork& w, const Eigen::VectorXd& v, const RowMatrixXd& unit, double tau) {
  w.pos_sim = unit.row(w.positive.index()).dot(v);
  const auto n = static_cast<Eigen::Index>(w.negatives.size());
  w.neg_sims.resize(n);
  for (Eigen::Index q = 0; q < n; ++q) w.neg_sims[q] = unit.row(w.negatives[q].index()).dot(v);

  w.probs.resize(n + 1);
  w.probs[0] = w.pos_sim / tau;
  w.probs.tail(n) = w.neg_sims / tau;
  const double shift = w.probs.maxCoeff();
  w.probs = (w.probs.array() - shift).exp().matrix();
  const double sum = w.probs.sum();
  w.probs /= sum;
  w.value = std::max(0.0, shift + std::log(sum) - w.pos_sim / tau);
}

struct Evaluation {
  LossBreakdown breakdown;
  GradientSet grad;
};

Evaluation evaluate(const HierarchyDag& dag, const LossConfig& config, const Eigen::VectorXd& v, NodeId label,
                    const ClassFeatures& classes, const WeightVector& weights, const SampleRng& rng,
                    bool want_grad) {
  if (!dag.contains(label)) fail(ErrorCode::UnknownNode, "unknown label id " + std::to_string(label.value));
  if (label == dag.root()) fail(ErrorCode::InvalidInput, "the root cannot be a training label");
  if (!(config.tau > 0.0)) fail(ErrorCode::NonPositiveTemperature, "temperature must be positive");
  if (config.epsilon < 1) fail(ErrorCode::InvalidInput, "epsilon must be at least 1");
  if (classes.rows() != static_cast<Eigen::Index>(dag.node_count())) {
    fail(ErrorCode::DimMismatch, "class table must have one row per node");
  }
  if (v.size() != classes.dim()) fail(ErrorCode::DimMismatch, "image and class dims differ");
  const int max_depth = dag.max_depth();
  if (weights.size() != max_depth) fail(ErrorCode::DimMismatch, "weight vector must cover depths 1..max_depth");

  const int d = dag.depth(label);
  const std::vector<NodeId> path = dag.path_to(label);
  std::vector<NodeId> forbidden(path.begin() + 1, path.end());
  std::sort(forbidden.begin(), forbidden.end());

  std::vector<PairWork> pairs;
  auto add = [&](int j, int l) {
    PairWork w;
    w.outer = j;
    w.inner = l;
    w.positive = path[j];
    w.anchor = path[l];
    pairs.push_back(std::move(w));
  };
  switch (config.variant) {
    case LossVariant::Full: {
      const auto outer = outer_range(config.outer_ratio, d, config.range);
      for (int j = outer.start; j <= outer.end; ++j) {
        const auto inner = inner_range(config.inner_ratio, j, config.range);
        for (int l = inner.start; l <= inner.end; ++l) add(j, l);
      }
      break;
    }
    case LossVariant::OuterOnly: {
      const auto outer = outer_range(config.outer_ratio, d, config.range);
      for (int j = outer.start; j <= outer.end; ++j) add(j, j);
      break;
    }
    case LossVariant::InnerOnly: {
      const auto inner = inner_range(config.inner_ratio, d, config.range);
      for (int l = inner.start; l <= inner.end; ++l) add(d, l);
      break;
    }
    case LossVariant::Flat:
      add(d, d);
      break;
  }

  const SamplingStrategy strategy =
      config.variant == LossVariant::Flat ? SamplingStrategy{SamplingKind::Sibling, 0} : config.sampling;
  for (auto& w : pairs) {
    SamplerContext ctx{config.epsilon, pair_stream_key(rng, w.outer, w.inner), forbidden};
    w.negatives = sample_negatives(dag, strategy, w.anchor, ctx, &classes.unit());
    evaluate_pair(w, v, classes.unit(), config.tau);
  }

  Evaluation out;
  LossBreakdown& bd = out.breakdown;
  std::map<int, int> inner_count;
  for (const auto& w : pairs) {
    bd.per_level[w.outer] += w.value;
    ++inner_count[w.outer];
  }
  for (auto& [j, sum] : bd.per_level) sum /= inner_count[j];

  double weight_sum = 0.0;
  for (const auto& [j, lj] : bd.per_level) weight_sum += weights[j - 1];
  for (const auto& [j, lj] : bd.per_level) {
    double wj = weights[j - 1];
    if (config.variant == LossVariant::Flat) {
      wj = 1.0;
    } else if (config.renormalize_active_weights) {
      if (!(weight_sum > 0.0)) fail(ErrorCode::InvalidInput, "active level weights sum to zero");
      wj /= weight_sum;
    }
    bd.weights_used[j] = wj;
    bd.total += wj * lj;
  }
  for (auto& w : pairs) {
    bd.terms.push_back({w.outer, w.inner, w.positive, w.anchor, w.negatives, w.value});
  }
  if (!want_grad) return out;

  GradientSet& g = out.grad;
  const double tau = config.tau;
  g.d_weights = Eigen::VectorXd::Zero(max_depth);
  if (config.variant != LossVariant::Flat) {
    for (const auto& [j, lj] : bd.per_level) {
      g.d_weights[j - 1] = config.renormalize_active_weights ? (lj - bd.total) / weight_sum : lj;
    }
  }
  g.d_adaptive = config.weighting == WeightingKind::AdaptiveLearned ? softmax_backward(weights, g.d_weights)
                                                                     : Eigen::VectorXd::Zero(max_depth);

  // dL/dsim for every class that took part, merged per class afterwards.
  std::vector<std::pair<NodeId, double>> coef;
  for (const auto& w : pairs) {
    const double c = bd.weights_used.at(w.outer) / inner_count.at(w.outer);
    coef.emplace_back(w.positive, c * (w.probs[0] - 1.0) / tau);
    double expected_sim = w.probs[0] * w.pos_sim;
    for (std::size_t q = 0; q < w.negatives.size(); ++q) {
      const auto qi = static_cast<Eigen::Index>(q) + 1;
      coef.emplace_back(w.negatives[q], c * w.probs[qi] / tau);
      expected_sim += w.probs[qi] * w.neg_sims[qi - 1];
    }
    g.d_tau += c * (w.pos_sim - expected_sim) / (tau * tau);
  }
  std::stable_sort(coef.begin(), coef.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<NodeId, double>> merged;
  for (const auto& [c, x] : coef) {
    if (!merged.empty() && merged.back().first == c) {
      merged.back().second += x;
    } else {
      merged.emplace_back(c, x);
    }
  }

  const RowMatrixXd& unit = classes.unit();
  g.d_image = Eigen::VectorXd::Zero(v.size());
  g.d_class.ids.reserve(merged.size());
  g.d_class.rows.resize(static_cast<Eigen::Index>(merged.size()), v.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const auto [c, x] = merged[i];
    const auto u = unit.row(c.index());
    g.d_image += x * u.transpose();
    const double s = u.dot(v);
    // d sim / d raw = (I - u u^T) v / |raw|
    g.d_class.rows.row(static_cast<Eigen::Index>(i)) = x * (v.transpose() - s * u) / classes.norm(c);
    g.d_class.ids.push_back(c);
  }
  return out;
}

}  // namespace

LevelRange outer_range(double outer_ratio, int depth, RangeConvention convention) {
  return level_range(outer_ratio, depth, convention);
}

LevelRange inner_range(double inner_ratio, int positive_depth, RangeConvention convention) {
  return level_range(inner_ratio, positive_depth, convention);
}

ClassFeatures::ClassFeatures(const RowMatrixXd& raw) : unit_(raw), norms_(raw.rows()) {
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double n = raw.row(i).norm();
    if (!(n > 0.0)) fail(ErrorCode::ZeroVector, "zero class embedding for node " + std::to_string(i));
    norms_[i] = n;
    unit_.row(i) /= n;
  }
}

std::uint64_t pair_stream_key(const SampleRng& rng, int outer, int inner) {
  return derive_key({rng.seed, rng.epoch, rng.image_id, static_cast<std::uint64_t>(outer),
                     static_cast<std::uint64_t>(inner)});
}

const double* ClassGradient::find(NodeId c) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), c);
  if (it == ids.end() || *it != c) return nullptr;
  return rows.row(it - ids.begin()).data();
}

LossBreakdown sample_loss(const HierarchyDag& dag, const LossConfig& config, const Eigen::VectorXd& image_vec,
                          NodeId label, const ClassFeatures& classes, const WeightVector& weights,
                          const SampleRng& rng) {
  return evaluate(dag, config, image_vec, label, classes, weights, rng, false).breakdown;
}

std::pair<LossBreakdown, GradientSet> sample_grad(const HierarchyDag& dag, const LossConfig& config,
                                                  const Eigen::VectorXd& image_vec, NodeId label,
                                                  const ClassFeatures& classes, const WeightVector& weights,
                                                  const SampleRng& rng) {
  auto e = evaluate(dag, config, image_vec, label, classes, weights, rng, true);
  return {std::move(e.breakdown), std::move(e.grad)};
}

BatchResult batch_loss(const HierarchyDag& dag, const LossConfig& config, const Dataset& data,
                       std::span<const std::size_t> rows, const ClassFeatures& classes, const WeightVector& weights,
                       std::uint64_t seed, std::uint64_t epoch, int threads) {
  if (rows.empty()) fail(ErrorCode::EmptyBatch, "batch is empty");
  const std::size_t n = rows.size();
  std::vector<Evaluation> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      try {
        const std::size_t r = rows[i];
        const Eigen::VectorXd v = data.images.values.row(static_cast<Eigen::Index>(r)).transpose();
        results[i] = evaluate(dag, config, v, data.labels[r], classes, weights,
                              SampleRng{seed, epoch, data.images.owners[r]}, true);
        results[i].breakdown.terms.clear();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(n)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const Eigen::Index dim = classes.dim();
  const int max_depth = dag.max_depth();
  BatchResult out;
  GradientSet& g = out.grad;
  g.d_image = Eigen::VectorXd::Zero(dim);
  g.d_weights = Eigen::VectorXd::Zero(max_depth);
  g.d_adaptive = Eigen::VectorXd::Zero(max_depth);
  RowMatrixXd dense = RowMatrixXd::Zero(classes.rows(), dim);
  std::vector<char> touched(static_cast<std::size_t>(classes.rows()), 0);
  const double scale = 1.0 / static_cast<double>(n);

  for (const auto& r : results) {
    out.mean.total += r.breakdown.total;
    for (const auto& [j, lj] : r.breakdown.per_level) out.mean.per_level[j] += lj;
    g.d_image += r.grad.d_image;
    g.d_tau += r.grad.d_tau;
    g.d_weights += r.grad.d_weights;
    g.d_adaptive += r.grad.d_adaptive;
    for (std::size_t i = 0; i < r.grad.d_class.ids.size(); ++i) {
      const auto c = r.grad.d_class.ids[i].index();
      dense.row(static_cast<Eigen::Index>(c)) += r.grad.d_class.rows.row(static_cast<Eigen::Index>(i));
      touched[c] = 1;
    }
  }
  out.mean.total *= scale;
  for (auto& [j, lj] : out.mean.per_level) lj *= scale;
  g.d_image *= scale;
  g.d_tau *= scale;
  g.d_weights *= scale;
  g.d_adaptive *= scale;

  const auto count = static_cast<Eigen::Index>(std::count(touched.begin(), touched.end(), 1));
  g.d_class.rows.resize(count, dim);
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < touched.size(); ++c) {
    if (!touched[c]) continue;
    g.d_class.ids.emplace_back(c);
    g.d_class.rows.row(k++) = dense.row(static_cast<Eigen::Index>(c)) * scale;
  }
  return out;
}

}  // namespace hgr
