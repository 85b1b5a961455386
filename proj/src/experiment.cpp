#include "hgr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace hgr {
namespace fs = std::filesystem;

namespace {

std::string join(const fs::path& dir, const char* file) { return (dir / file).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[64];
  const auto end = std::to_chars(buf, buf + sizeof buf, x).ptr;
  return std::string(buf, end);
}

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string join_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::Usage, "bad " + what + " value '" + text + "'");
  }
}

}  // namespace

ExperimentData synth_data(const SynthConfig& cfg) {
  ExperimentData data{gen_hierarchy(cfg), {}, {}};
  const auto protos = gen_prototypes(data.dag, cfg);
  auto generated = gen_dataset(data.dag, protos, cfg);
  data.all = std::move(generated.images);
  data.split = std::move(generated.split);
  return data;
}

void write_synth_dir(const std::string& dir, const SynthConfig& cfg, const ExperimentData& data) {
  ensure_dir(dir);
  const fs::path d(dir);
  write_edge_list(join(d, kHierarchyFile), data.dag.edges());
  write_split(join(d, kSplitFile), data.dag, data.split);
  write_features(data.all.images, join(d, kImagesFile));
  write_labels(join(d, kLabelsFile), data.dag, data.all);
  write_text(join(d, kMetaFile), format_synth_meta(cfg));
}

ExperimentData load_data_dir(const std::string& dir, const LoadOptions& options) {
  const fs::path d(dir);
  const auto edges = read_edge_list(join(d, kHierarchyFile));
  ExperimentData data{load_hierarchy(edges, options), {}, {}};
  data.split = read_split(join(d, kSplitFile), data.dag);
  data.all = read_dataset(join(d, kImagesFile), join(d, kLabelsFile), data.dag);
  return data;
}

RunResult train_and_evaluate(const ExperimentData& data, const Dataset& train, const ClassSplit& train_split,
                             const Dataset& test, const RunConfig& cfg) {
  const Eigen::Index dim = data.all.images.dim();
  ModelState init = init_model(data.dag, dim, cfg.loss, cfg.train.seed);
  LossConfig loss = cfg.loss;
  RunResult out;
  out.trained = hgr::train(data.dag, train, train_split, loss, cfg.train, std::move(init));
  out.report = evaluate(data.dag, test, data.split, out.trained.class_features, out.trained.state.tau, cfg.eval);
  return out;
}

RunResult run_zsl(const ExperimentData& data, const RunConfig& cfg) {
  const auto parts = fewshot_extend(data.all, data.split, 0, cfg.train.seed);
  return train_and_evaluate(data, parts.train, parts.train_split, parts.test, cfg);
}

void write_checkpoint(const std::string& dir, const HierarchyDag& dag, const RunConfig& cfg, const TrainResult& result) {
  ensure_dir(dir);
  const fs::path d(dir);
  write_features(result.class_features, join(d, kClassFeaturesFile));
  write_features(result.state.node_params, join(d, kNodeParamsFile));
  std::ostringstream meta;
  meta << "tau=" << fmt(result.state.tau) << '\n';
  meta << "weights=" << join_vec(current_weights(dag, cfg.loss.weighting, result.state.adaptive)) << '\n';
  meta << "adaptive_raw=" << join_vec(result.state.adaptive.raw) << '\n';
  meta << "initial_loss=" << fmt(result.log.initial_loss) << '\n';
  for (const auto& e : result.log.epochs) meta << "epoch_loss." << e.epoch << '=' << fmt(e.mean_loss) << '\n';
  meta << format_run_meta(cfg);
  write_text(join(d, kMetaFile), meta.str());
}

Checkpoint read_checkpoint(const std::string& dir) {
  const fs::path d(dir);
  Checkpoint ck;
  ck.class_features = l2_normalize(read_features(join(d, kClassFeaturesFile)));
  ck.node_params = read_features(join(d, kNodeParamsFile));
  std::ifstream in(join(d, kMetaFile));
  if (!in) fail(ErrorCode::IoError, "cannot open checkpoint meta in '" + dir + "'");
  std::string line;
  bool have_tau = false;
  while (std::getline(in, line)) {
    if (line.rfind("tau=", 0) == 0) {
      ck.tau = parse_double(line.substr(4), "tau");
      have_tau = true;
    }
  }
  if (!have_tau) fail(ErrorCode::InvalidInput, "checkpoint meta lacks tau");
  return ck;
}

AblationAxis parse_ablation_axis(const std::string& text) {
  if (text == "K" || text == "k") return AblationAxis::OuterRatio;
  if (text == "M" || text == "m") return AblationAxis::InnerRatio;
  if (text == "sampling") return AblationAxis::Sampling;
  if (text == "weighting") return AblationAxis::Weighting;
  if (text == "variant") return AblationAxis::Variant;
  fail(ErrorCode::Usage, "unknown ablation axis '" + text + "'");
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::OuterRatio: return "K";
    case AblationAxis::InnerRatio: return "M";
    case AblationAxis::Sampling: return "sampling";
    case AblationAxis::Weighting: return "weighting";
    case AblationAxis::Variant: return "variant";
  }
  return "?";
}

RunConfig apply_axis(const RunConfig& base, AblationAxis axis, const std::string& value) {
  RunConfig cfg = base;
  switch (axis) {
    case AblationAxis::OuterRatio:
      cfg.loss.outer_ratio = parse_double(value, "K");
      if (!(cfg.loss.outer_ratio >= 0.0 && cfg.loss.outer_ratio <= 1.0)) fail(ErrorCode::InvalidRatio, "K must lie in [0, 1]");
      break;
    case AblationAxis::InnerRatio:
      cfg.loss.inner_ratio = parse_double(value, "M");
      if (!(cfg.loss.inner_ratio >= 0.0 && cfg.loss.inner_ratio <= 1.0)) fail(ErrorCode::InvalidRatio, "M must lie in [0, 1]");
      break;
    case AblationAxis::Sampling:
      cfg.loss.sampling.kind = parse_sampling_kind(value);
      break;
    case AblationAxis::Weighting:
      cfg.loss.weighting = parse_weighting_kind(value);
      break;
    case AblationAxis::Variant:
      cfg.loss.variant = parse_loss_variant(value);
      break;
  }
  return cfg;
}

ResultTable run_ablate(const ExperimentData& data, const RunConfig& base, AblationAxis axis,
                       const std::vector<std::string>& values) {
  if (values.empty()) fail(ErrorCode::Usage, "ablation needs at least one value");
  std::vector<RunConfig> configs;
  for (const auto& v : values) configs.push_back(apply_axis(base, axis, v));

  ResultTable table;
  table.axis = to_string(axis);
  table.header.emplace_back("command", "ablate");
  table.header.emplace_back("axis", table.axis);
  std::istringstream meta(format_run_meta(base));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) table.header.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = run_zsl(data, configs[i]);
    const double last = r.trained.log.epochs.empty() ? r.trained.log.initial_loss : r.trained.log.epochs.back().mean_loss;
    table.rows.push_back({values[i], r.report, r.trained.log.initial_loss, last});
  }
  return table;
}

ResultTable run_fewshot(const ExperimentData& data, const RunConfig& base, const std::vector<int>& shots) {
  if (shots.empty()) fail(ErrorCode::Usage, "few-shot run needs at least one shot count");
  ResultTable table;
  table.axis = "shots";
  table.header.emplace_back("command", "fewshot");
  std::istringstream meta(format_run_meta(base));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) table.header.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  std::set<int> done;
  for (int k : shots) {
    if (k < 0) fail(ErrorCode::Usage, "shot counts must be non-negative");
    if (!done.insert(k).second) {
      table.warnings.push_back("duplicate shot value " + std::to_string(k) + " ignored");
      continue;
    }
    const auto parts = fewshot_extend(data.all, data.split, k, base.train.seed);
    const auto r = train_and_evaluate(data, parts.train, parts.train_split, parts.test, base);
    const double last = r.trained.log.epochs.empty() ? r.trained.log.initial_loss : r.trained.log.epochs.back().mean_loss;
    table.rows.push_back({std::to_string(k), r.report, r.trained.log.initial_loss, last});
  }
  return table;
}

std::string format_table(const ResultTable& table) {
  std::ostringstream os;
  for (const auto& [k, v] : table.header) os << k << '=' << v << '\n';
  for (const auto& w : table.warnings) os << "warning=" << w << '\n';
  os << '\n' << table.axis;
  std::vector<int> ks;
  if (!table.rows.empty()) {
    for (const auto& [k, v] : table.rows.front().report.hit_at) ks.push_back(k);
  }
  for (int k : ks) os << "\thit@" << k;
  os << "\ttor\tpor\tn_images\tinitial_loss\tfinal_loss\n";
  for (const auto& row : table.rows) {
    os << row.value;
    for (int k : ks) os << '\t' << fmt6(row.report.hit_at.at(k));
    os << '\t' << fmt6(row.report.tor) << '\t' << fmt6(row.report.por) << '\t' << row.report.n_images << '\t'
       << fmt6(row.initial_loss) << '\t' << fmt6(row.final_loss) << '\n';
  }
  return os.str();
}

std::string format_run_meta(const RunConfig& cfg) {
  std::ostringstream os;
  os << "k=" << fmt(cfg.loss.outer_ratio) << '\n'
     << "m=" << fmt(cfg.loss.inner_ratio) << '\n'
     << "epsilon=" << cfg.loss.epsilon << '\n'
     << "tau_init=" << fmt(cfg.loss.tau) << '\n'
     << "sampling=" << to_string(cfg.loss.sampling.kind) << '\n'
     << "topm_m=" << cfg.loss.sampling.m << '\n'
     << "weighting=" << to_string(cfg.loss.weighting) << '\n'
     << "range_convention=" << to_string(cfg.loss.range) << '\n'
     << "variant=" << to_string(cfg.loss.variant) << '\n'
     << "renormalize_weights=" << (cfg.loss.renormalize_active_weights ? 1 : 0) << '\n'
     << "epochs=" << cfg.train.epochs << '\n'
     << "batch_size=" << cfg.train.batch_size << '\n'
     << "lr=" << fmt(cfg.train.lr_main) << '\n'
     << "lr_adaptive=" << fmt(cfg.train.lr_adaptive) << '\n'
     << "weight_decay=" << fmt(cfg.train.weight_decay) << '\n'
     << "clip_norm=" << fmt(cfg.train.clip_norm) << '\n'
     << "schedule=" << to_string(cfg.train.schedule) << '\n'
     << "encoder=" << to_string(cfg.train.encoder) << '\n'
     << "renormalize_nodes=" << (cfg.train.renormalize_nodes ? 1 : 0) << '\n'
     << "seed=" << cfg.train.seed << '\n'
     << "mode=" << to_string(cfg.eval.mode) << '\n'
     << "tor_topk=" << cfg.eval.tor_topk << '\n';
  return os.str();
}

}  // namespace hgr
