#include "hgr/trainer.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "hgr/rng.hpp"

namespace hgr {

EncoderKind parse_encoder_kind(const std::string& text) {
  if (text == "table") return EncoderKind::Table;
  if (text == "path-sum") return EncoderKind::PathSum;
  fail(ErrorCode::Usage, "unknown class encoder '" + text + "'");
}

std::string to_string(EncoderKind kind) { return kind == EncoderKind::Table ? "table" : "path-sum"; }

LrSchedule parse_lr_schedule(const std::string& text) {
  if (text == "constant") return LrSchedule::Constant;
  if (text == "cosine") return LrSchedule::Cosine;
  fail(ErrorCode::Usage, "unknown lr schedule '" + text + "'");
}

std::string to_string(LrSchedule s) { return s == LrSchedule::Constant ? "constant" : "cosine"; }

namespace {

// Non-root nodes on the root-to-c path; the root's own row stands alone.
std::vector<NodeId> encoder_support(const HierarchyDag& dag, NodeId c) {
  if (c == dag.root()) return {c};
  auto path = dag.path_to(c);
  path.erase(path.begin());
  return path;
}

}  // namespace

RowMatrixXd encode_classes(const HierarchyDag& dag, EncoderKind kind, const RowMatrixXd& node_params) {
  if (node_params.rows() != static_cast<Eigen::Index>(dag.node_count())) {
    fail(ErrorCode::DimMismatch, "node parameter table must have one row per node");
  }
  if (kind == EncoderKind::Table) return node_params;
  RowMatrixXd out = RowMatrixXd::Zero(node_params.rows(), node_params.cols());
  for (std::size_t c = 0; c < dag.node_count(); ++c) {
    for (NodeId a : encoder_support(dag, NodeId(c))) {
      out.row(static_cast<Eigen::Index>(c)) += node_params.row(static_cast<Eigen::Index>(a.index()));
    }
  }
  return out;
}

GradientSet encoder_backward(const HierarchyDag& dag, EncoderKind kind, const GradientSet& class_grad) {
  if (kind == EncoderKind::Table) return class_grad;
  GradientSet out;
  out.d_image = class_grad.d_image;
  out.d_tau = class_grad.d_tau;
  out.d_weights = class_grad.d_weights;
  out.d_adaptive = class_grad.d_adaptive;

  const Eigen::Index dim = class_grad.d_class.rows.cols();
  std::map<NodeId, Eigen::VectorXd> acc;
  for (std::size_t i = 0; i < class_grad.d_class.ids.size(); ++i) {
    const auto g = class_grad.d_class.rows.row(static_cast<Eigen::Index>(i)).transpose();
    for (NodeId a : encoder_support(dag, class_grad.d_class.ids[i])) {
      auto [it, inserted] = acc.try_emplace(a, Eigen::VectorXd::Zero(dim));
      it->second += g;
    }
  }
  out.d_class.rows.resize(static_cast<Eigen::Index>(acc.size()), dim);
  Eigen::Index k = 0;
  for (const auto& [a, g] : acc) {
    out.d_class.ids.push_back(a);
    out.d_class.rows.row(k++) = g.transpose();
  }
  return out;
}

double global_grad_norm(const GradientSet& grads) {
  double sq = grads.d_class.rows.squaredNorm() + grads.d_tau * grads.d_tau;
  if (grads.d_adaptive.size() > 0) sq += grads.d_adaptive.squaredNorm();
  return std::sqrt(sq);
}

GradientSet clip_grad_norm(GradientSet grads, double max_norm) {
  if (!(max_norm > 0.0)) fail(ErrorCode::InvalidInput, "clip norm must be positive");
  const double norm = global_grad_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.d_class.rows *= scale;
    grads.d_tau *= scale;
    grads.d_adaptive *= scale;
  }
  return grads;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 0) fail(ErrorCode::InvalidInput, "epochs must be non-negative");
  if (cfg.batch_size < 1) fail(ErrorCode::InvalidInput, "batch size must be at least 1");
  if (!(cfg.lr_main > 0.0) || !(cfg.lr_adaptive > 0.0)) fail(ErrorCode::InvalidInput, "learning rates must be positive");
  if (cfg.weight_decay < 0.0) fail(ErrorCode::InvalidInput, "weight decay must be non-negative");
  if (!(cfg.clip_norm > 0.0)) fail(ErrorCode::InvalidInput, "clip norm must be positive");
  if (cfg.threads < 1) fail(ErrorCode::InvalidInput, "threads must be at least 1");
}

ModelState init_model(const HierarchyDag& dag, Eigen::Index dim, const LossConfig& loss_cfg, std::uint64_t seed) {
  ModelState s;
  s.node_params = random_class_table(dag.node_count(), dim, seed);
  s.tau = loss_cfg.tau;
  s.adaptive = AdaptiveParams::zeros(dag.max_depth());
  return s;
}

WeightVector current_weights(const HierarchyDag& dag, WeightingKind kind, const AdaptiveParams& adaptive) {
  const auto counts = dag.class_counts_per_depth();
  return compute_weights(kind, dag.max_depth(), counts, &adaptive);
}

FeatureMatrix class_features(const HierarchyDag& dag, EncoderKind kind, const ModelState& state) {
  FeatureMatrix out(state.node_params.owners, encode_classes(dag, kind, state.node_params.values));
  return l2_normalize(std::move(out));
}

namespace {

// Decoupled-weight-decay Adam over one dense tensor.
struct AdamW {
  Eigen::ArrayXXd m, v;

  void step(Eigen::Ref<RowMatrixXd> param, const RowMatrixXd& grad, const TrainConfig& cfg, double lr, long t,
            double decay) {
    if (m.size() == 0) {
      m = Eigen::ArrayXXd::Zero(param.rows(), param.cols());
      v = m;
    }
    const Eigen::ArrayXXd g = grad.array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    param.array() -= lr * decay * param.array();
    param.array() -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg.adam_eps);
  }
};

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

double mean_loss(const HierarchyDag& dag, const Dataset& data, const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                 const ModelState& state, std::uint64_t epoch) {
  if (data.empty()) fail(ErrorCode::EmptyBatch, "dataset is empty");
  LossConfig cfg = loss_cfg;
  cfg.tau = state.tau;
  const ClassFeatures classes(encode_classes(dag, train_cfg.encoder, state.node_params.values));
  const WeightVector weights = current_weights(dag, cfg.weighting, state.adaptive);
  const auto rows = iota_rows(data.size());
  double sum = 0.0;
  const auto batch = static_cast<std::size_t>(train_cfg.batch_size);
  for (std::size_t b = 0; b < rows.size(); b += batch) {
    const std::size_t e = std::min(rows.size(), b + batch);
    std::span<const std::size_t> slice(rows.data() + b, e - b);
    sum += batch_loss(dag, cfg, data, slice, classes, weights, train_cfg.seed, epoch, train_cfg.threads).mean.total *
           static_cast<double>(slice.size());
  }
  return sum / static_cast<double>(rows.size());
}

TrainResult train(const HierarchyDag& dag, const Dataset& data, const ClassSplit& split, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, ModelState state) {
  validate(train_cfg);
  validate_dataset(dag, data);
  for (NodeId c : data.labels) {
    if (!split.is_seen(c)) fail(ErrorCode::LabelNotSeen, "training label '" + dag.name(c) + "' is not a seen class");
  }
  if (state.node_params.rows() != static_cast<Eigen::Index>(dag.node_count())) {
    fail(ErrorCode::DimMismatch, "model has " + std::to_string(state.node_params.rows()) + " node rows, hierarchy has " +
                                     std::to_string(dag.node_count()));
  }
  if (!data.empty() && data.images.dim() != state.node_params.dim()) {
    fail(ErrorCode::DimMismatch, "image and class embedding dims differ");
  }
  if (state.adaptive.raw.size() != dag.max_depth()) state.adaptive = AdaptiveParams::zeros(dag.max_depth());

  TrainResult result;
  if (train_cfg.epochs == 0 || data.empty()) {
    result.class_features = class_features(dag, train_cfg.encoder, state);
    result.state = std::move(state);
    return result;
  }

  const std::size_t n = data.size();
  const auto batch = static_cast<std::size_t>(train_cfg.batch_size);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * train_cfg.epochs;
  const bool adaptive = loss_cfg.weighting == WeightingKind::AdaptiveLearned;

  result.log.initial_loss = mean_loss(dag, data, loss_cfg, train_cfg, state, 0);

  AdamW node_opt;
  AdamW tau_opt;
  long step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    auto order = iota_rows(n);
    CounterRng shuffle(derive_key({train_cfg.seed, 0x5EEDULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < n; b += batch) {
      const std::size_t e = std::min(n, b + batch);
      std::span<const std::size_t> slice(order.data() + b, e - b);

      LossConfig cfg = loss_cfg;
      cfg.tau = state.tau;
      const ClassFeatures classes(encode_classes(dag, train_cfg.encoder, state.node_params.values));
      const WeightVector weights = current_weights(dag, cfg.weighting, state.adaptive);
      BatchResult br = batch_loss(dag, cfg, data, slice, classes, weights, train_cfg.seed,
                                  static_cast<std::uint64_t>(epoch), train_cfg.threads);
      epoch_sum += br.mean.total * static_cast<double>(slice.size());

      GradientSet g = clip_grad_norm(encoder_backward(dag, train_cfg.encoder, br.grad), train_cfg.clip_norm);

      double lr = train_cfg.lr_main;
      if (train_cfg.schedule == LrSchedule::Cosine) {
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      }
      ++step;

      RowMatrixXd dense = RowMatrixXd::Zero(state.node_params.rows(), state.node_params.dim());
      for (std::size_t i = 0; i < g.d_class.ids.size(); ++i) {
        dense.row(static_cast<Eigen::Index>(g.d_class.ids[i].index())) = g.d_class.rows.row(static_cast<Eigen::Index>(i));
      }
      node_opt.step(state.node_params.values, dense, train_cfg, lr, step, train_cfg.weight_decay);

      RowMatrixXd tau_param(1, 1), tau_grad(1, 1);
      tau_param(0, 0) = state.tau;
      tau_grad(0, 0) = g.d_tau;
      tau_opt.step(tau_param, tau_grad, train_cfg, lr, step, 0.0);
      state.tau = std::clamp(tau_param(0, 0), loss_cfg.tau_min, loss_cfg.tau_max);

      if (adaptive) state.adaptive.raw -= train_cfg.lr_adaptive * g.d_adaptive;

      if (train_cfg.renormalize_nodes) state.node_params = l2_normalize(std::move(state.node_params));
    }
    result.log.epochs.push_back({epoch, epoch_sum / static_cast<double>(n), state.tau,
                                 current_weights(dag, loss_cfg.weighting, state.adaptive)});
  }

  result.class_features = class_features(dag, train_cfg.encoder, state);
  result.state = std::move(state);
  return result;
}

FewShotData fewshot_extend(const Dataset& all, const ClassSplit& split, int k, std::uint64_t seed) {
  if (k < 0) fail(ErrorCode::InvalidInput, "shot count must be non-negative");
  std::vector<std::size_t> train_rows;
  std::map<NodeId, std::vector<std::size_t>> unseen_rows;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const NodeId c = all.labels[i];
    if (split.is_seen(c)) {
      train_rows.push_back(i);
    } else if (split.is_unseen(c)) {
      unseen_rows[c].push_back(i);
    }
  }
  for (NodeId c : split.unseen) {
    const std::size_t have = unseen_rows.count(c) ? unseen_rows[c].size() : 0;
    if (k > 0 && have < static_cast<std::size_t>(k) + 1) {
      fail(ErrorCode::InsufficientImages, "unseen class id " + std::to_string(c.value) + " has " +
                                              std::to_string(have) + " images, needs " + std::to_string(k + 1));
    }
  }

  FewShotData out;
  out.train_split = split;
  std::vector<std::size_t> test_rows;
  for (auto& [c, rows] : unseen_rows) {
    CounterRng rng(derive_key({seed, 0xF3517ULL, c.value}));
    const auto take = std::min(rows.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < take; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  out.train = subset(all, train_rows);
  out.test = subset(all, test_rows);
  if (k > 0) {
    out.train_split.seen.insert(out.train_split.seen.end(), split.unseen.begin(), split.unseen.end());
    std::sort(out.train_split.seen.begin(), out.train_split.seen.end());
    out.train_split.unseen.clear();
  }
  return out;
}

}  // namespace hgr
