// hgr: synthetic data, taxonomy validation, training, evaluation, ablation
// sweeps and few-shot runs for the hierarchical contrastive objective.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hgr/experiment.hpp"

namespace {

using namespace hgr;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
};

struct LossFlags {
  double k = 0.25;
  double m = 0.5;
  double tau_init = 0.07;
  int epsilon = 256;
  int topm_m = 1;
  std::string sampling = "topm";
  std::string weighting = "adaptive";
  std::string range = "algorithmic";
  std::string variant = "full";
  bool renormalize = false;
};

struct TrainFlags {
  int epochs = 30;
  int batch_size = 256;
  double lr = 1e-2;
  double lr_adaptive = 1e-4;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  std::string schedule = "cosine";
  std::string encoder = "path-sum";
  bool free_norms = false;
};

struct EvalFlags {
  std::string mode = "zsl";
  std::vector<int> ks{1, 2, 5, 10, 20};
  int tor_topk = 1;
};

void add_loss_flags(CLI::App* cmd, LossFlags& f) {
  cmd->add_option("--k", f.k, "outer ratio K in [0,1]")->capture_default_str();
  cmd->add_option("--m", f.m, "inner ratio M in [0,1]")->capture_default_str();
  cmd->add_option("--tau-init", f.tau_init, "initial temperature")->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "per-layer negative cap")->capture_default_str();
  cmd->add_option("--sampling", f.sampling, "random|sibling|similarity|topm")->capture_default_str();
  cmd->add_option("--topm-m", f.topm_m, "layers above the anchor for topm")->capture_default_str();
  cmd->add_option("--weighting", f.weighting, "adaptive|equal|lin-inc|lin-dec|exp-inc|exp-dec|inv-freq")
      ->capture_default_str();
  cmd->add_option("--range-convention", f.range, "algorithmic|ablation")->capture_default_str();
  cmd->add_option("--variant", f.variant, "full|outer-only|inner-only|flat")->capture_default_str();
  cmd->add_flag("--renormalize-weights", f.renormalize, "rescale level weights over each sample's active levels");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--epochs", f.epochs)->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size)->capture_default_str();
  cmd->add_option("--lr", f.lr, "main optimizer learning rate")->capture_default_str();
  cmd->add_option("--lr-adaptive", f.lr_adaptive, "SGD rate for adaptive level weights")->capture_default_str();
  cmd->add_option("--weight-decay", f.weight_decay)->capture_default_str();
  cmd->add_option("--clip-norm", f.clip_norm)->capture_default_str();
  cmd->add_option("--schedule", f.schedule, "constant|cosine")->capture_default_str();
  cmd->add_option("--class-encoder", f.encoder, "path-sum|table")->capture_default_str();
  cmd->add_flag("--no-node-renorm", f.free_norms, "leave node parameters off the unit sphere between steps");
}

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--mode", f.mode, "zsl|gzsl")->capture_default_str();
  cmd->add_option("--ks", f.ks, "comma-separated k values for Hit@k")->delimiter(',')->capture_default_str();
  cmd->add_option("--tor-topk", f.tor_topk, "predictions counted by TOR")->capture_default_str();
}

RunConfig make_config(const Globals& g, const LossFlags& lf, const TrainFlags& tf, const EvalFlags& ef) {
  RunConfig cfg;
  cfg.loss.outer_ratio = lf.k;
  cfg.loss.inner_ratio = lf.m;
  if (!(lf.k >= 0 && lf.k <= 1) || !(lf.m >= 0 && lf.m <= 1)) fail(ErrorCode::InvalidRatio, "--k and --m must lie in [0, 1]");
  if (lf.epsilon < 1) fail(ErrorCode::Usage, "--epsilon must be at least 1");
  if (lf.topm_m < 0) fail(ErrorCode::Usage, "--topm-m must be non-negative");
  if (!(lf.tau_init > 0)) fail(ErrorCode::NonPositiveTemperature, "--tau-init must be positive");
  cfg.loss.tau = lf.tau_init;
  cfg.loss.epsilon = lf.epsilon;
  cfg.loss.sampling = {parse_sampling_kind(lf.sampling), lf.topm_m};
  cfg.loss.weighting = parse_weighting_kind(lf.weighting);
  cfg.loss.range = parse_range_convention(lf.range);
  cfg.loss.variant = parse_loss_variant(lf.variant);
  cfg.loss.renormalize_active_weights = lf.renormalize;

  cfg.train.epochs = tf.epochs;
  cfg.train.batch_size = tf.batch_size;
  cfg.train.lr_main = tf.lr;
  cfg.train.lr_adaptive = tf.lr_adaptive;
  cfg.train.weight_decay = tf.weight_decay;
  cfg.train.clip_norm = tf.clip_norm;
  cfg.train.schedule = parse_lr_schedule(tf.schedule);
  cfg.train.encoder = parse_encoder_kind(tf.encoder);
  cfg.train.renormalize_nodes = !tf.free_norms;
  cfg.train.seed = g.seed;
  cfg.train.threads = g.threads;
  validate(cfg.train);

  cfg.eval.mode = parse_candidate_mode(ef.mode);
  cfg.eval.ks = ef.ks;
  for (int k : ef.ks) {
    if (k < 1) fail(ErrorCode::Usage, "--ks values must be positive");
  }
  cfg.eval.tor_topk = ef.tor_topk;
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

ExperimentData data_or_default(const std::string& dir, const Globals& g) {
  if (!dir.empty()) return load_data_dir(dir);
  SynthConfig sc;
  sc.seed = g.seed;
  return synth_data(sc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical contrastive training and zero-shot evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for loss evaluation")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic hierarchy with image features");
  SynthConfig sc;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--depth", sc.depth)->capture_default_str();
  synth->add_option("--branching", sc.branching)->capture_default_str();
  synth->add_option("--dim", sc.dim)->capture_default_str();
  synth->add_option("--sigma-class", sc.sigma_class, "per-depth prototype noise")->delimiter(',');
  synth->add_option("--sigma-image", sc.sigma_image)->capture_default_str();
  synth->add_option("--images-per-class", sc.images_per_class)->capture_default_str();
  synth->add_option("--seen-fraction", sc.seen_fraction)->capture_default_str();

  // validate
  auto* val = app.add_subcommand("validate", "check an edge-list taxonomy and print statistics");
  std::string val_file, val_split, val_root;
  LoadOptions val_opts;
  val->add_option("hierarchy", val_file, "edge list (child<TAB>parent)")->required();
  val->add_option("--split", val_split, "optional split file to check");
  val->add_option("--root", val_root, "declared root name");
  val->add_flag("--prune-unreachable", val_opts.prune_unreachable, "drop nodes not reachable from the root");
  val->add_flag("--stable-ids", val_opts.stable_ids, "assign ids from sorted names");

  LossFlags lf;
  TrainFlags tf;
  EvalFlags ef;

  // train
  auto* tr = app.add_subcommand("train", "train class embeddings on seen-class images");
  std::string tr_data, tr_out;
  tr->add_option("--data", tr_data, "data directory (see synth)")->required();
  tr->add_option("--out", tr_out, "checkpoint directory")->required();
  add_loss_flags(tr, lf);
  add_train_flags(tr, tf);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on unseen-class images");
  std::string ev_data, ev_ckpt, ev_report;
  ev->add_option("--data", ev_data, "data directory")->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint directory")->required();
  ev->add_option("--report", ev_report, "write the report here instead of stdout");
  add_eval_flags(ev, ef);

  // ablate
  auto* ab = app.add_subcommand("ablate", "sweep one setting, training and evaluating per value");
  std::string ab_data, ab_axis, ab_report;
  std::vector<std::string> ab_values;
  ab->add_option("--data", ab_data, "data directory (default: synthetic default instance)");
  ab->add_option("--axis", ab_axis, "K|M|sampling|weighting|variant")->required();
  ab->add_option("--values", ab_values, "comma-separated values")->delimiter(',')->required();
  ab->add_option("--report", ab_report, "write the table here instead of stdout");
  add_loss_flags(ab, lf);
  add_train_flags(ab, tf);
  add_eval_flags(ab, ef);

  // fewshot
  auto* fsh = app.add_subcommand("fewshot", "k-shot runs: move k images per unseen class into training");
  std::string fs_data, fs_report;
  std::vector<int> fs_shots;
  fsh->add_option("--data", fs_data, "data directory (default: synthetic default instance)");
  fsh->add_option("--shots", fs_shots, "comma-separated shot counts")->delimiter(',')->required();
  fsh->add_option("--report", fs_report, "write the table here instead of stdout");
  add_loss_flags(fsh, lf);
  add_train_flags(fsh, tf);
  add_eval_flags(fsh, ef);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[" << error_tag(ErrorCode::Usage) << "]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*synth) {
      sc.seed = g.seed;
      const auto data = synth_data(sc);
      write_synth_dir(synth_out, sc, data);
      if (!g.quiet) {
        std::cout << "nodes=" << data.dag.node_count() << "\nimages=" << data.all.size()
                  << "\nseen=" << data.split.seen.size() << "\nunseen=" << data.split.unseen.size() << '\n';
      }
    } else if (*val) {
      if (!val_root.empty()) val_opts.declared_root = val_root;
      const auto dag = load_hierarchy(read_edge_list(val_file), val_opts);
      std::cout << "nodes=" << dag.node_count() << "\nedges=" << dag.edge_count() << "\nroot=" << dag.name(dag.root())
                << "\nsynthetic_root=" << (dag.has_synthetic_root() ? 1 : 0) << "\nmax_depth=" << dag.max_depth() << '\n';
      std::size_t leaves = 0;
      for (std::size_t c = 0; c < dag.node_count(); ++c) leaves += dag.is_leaf(NodeId(c)) ? 1 : 0;
      std::cout << "leaves=" << leaves << '\n';
      for (int l = 0; l <= dag.max_depth(); ++l) std::cout << "depth." << l << '=' << dag.nodes_at_depth(l).size() << '\n';
      if (!dag.pruned().empty()) {
        std::cout << "pruned=" << dag.pruned().size() << '\n';
        if (!g.quiet) {
          for (const auto& n : dag.pruned()) std::cerr << "pruned unreachable node: " << n << '\n';
        }
      }
      if (!val_split.empty()) {
        const auto split = read_split(val_split, dag);
        std::cout << "seen=" << split.seen.size() << "\nunseen=" << split.unseen.size() << '\n';
      }
    } else if (*tr) {
      const RunConfig cfg = make_config(g, lf, tf, ef);
      const auto data = load_data_dir(tr_data);
      const auto parts = fewshot_extend(data.all, data.split, 0, cfg.train.seed);
      ModelState init = init_model(data.dag, data.all.images.dim(), cfg.loss, cfg.train.seed);
      const auto result = train(data.dag, parts.train, parts.train_split, cfg.loss, cfg.train, std::move(init));
      write_checkpoint(tr_out, data.dag, cfg, result);
      if (!g.quiet) {
        std::cerr << "initial_loss=" << result.log.initial_loss << '\n';
        for (const auto& e : result.log.epochs) {
          std::cerr << "epoch=" << e.epoch << " loss=" << e.mean_loss << " tau=" << e.tau << '\n';
        }
      }
    } else if (*ev) {
      const RunConfig cfg = make_config(g, lf, tf, ef);
      const auto data = load_data_dir(ev_data);
      const auto ck = read_checkpoint(ev_ckpt);
      const auto parts = fewshot_extend(data.all, data.split, 0, cfg.train.seed);
      const auto report = evaluate(data.dag, parts.test, data.split, ck.class_features, ck.tau, cfg.eval);
      emit("mode=" + to_string(cfg.eval.mode) + "\n" + format_report(report), ev_report);
    } else if (*ab) {
      const RunConfig cfg = make_config(g, lf, tf, ef);
      const auto data = data_or_default(ab_data, g);
      const auto table = run_ablate(data, cfg, parse_ablation_axis(ab_axis), ab_values);
      emit(format_table(table), ab_report);
    } else if (*fsh) {
      const RunConfig cfg = make_config(g, lf, tf, ef);
      const auto data = data_or_default(fs_data, g);
      const auto table = run_fewshot(data, cfg, fs_shots);
      for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
      emit(format_table(table), fs_report);
    }
  } catch (const Error& e) {
    std::cerr << "error[" << error_tag(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
