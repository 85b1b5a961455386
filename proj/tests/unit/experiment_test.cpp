#include <doctest.h>

#include <filesystem>

#include "hgr/experiment.hpp"

using namespace hgr;

namespace {

SynthConfig small_synth() {
  SynthConfig sc;
  sc.depth = 3;
  sc.sigma_class = {0.8, 0.6, 0.45};
  sc.images_per_class = 6;
  sc.dim = 16;
  sc.seed = 4;
  return sc;
}

RunConfig quick_run() {
  RunConfig cfg;
  cfg.train.epochs = 3;
  cfg.train.batch_size = 32;
  cfg.train.seed = 5;
  return cfg;
}

RowMatrixXd as_float(const RowMatrixXd& m) { return m.cast<float>().cast<double>(); }

std::string scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hgr_experiment_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("an empty sweep is a usage error") {
  const auto data = synth_data(small_synth());
  try {
    run_ablate(data, quick_run(), AblationAxis::OuterRatio, {});
    FAIL("empty sweep accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Usage);
  }
  CHECK_THROWS_AS(run_ablate(data, quick_run(), AblationAxis::OuterRatio, {"1.5"}), Error);
  CHECK_THROWS_AS(parse_ablation_axis("lr"), Error);
  CHECK(parse_ablation_axis("K") == AblationAxis::OuterRatio);
}

TEST_CASE("few-shot drops duplicate shot counts and matches the zero-shot run at k = 0") {
  const auto data = synth_data(small_synth());
  const auto cfg = quick_run();
  const auto table = run_fewshot(data, cfg, {0, 1, 0});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.warnings.size() == 1);
  CHECK(table.rows[0].value == "0");
  CHECK(table.rows[1].value == "1");
  const auto zsl = run_zsl(data, cfg);
  CHECK(table.rows[0].report.hit_at.at(1) == zsl.report.hit_at.at(1));
  CHECK(table.rows[0].report.por == zsl.report.por);
  CHECK(table.rows[0].final_loss == zsl.trained.log.epochs.back().mean_loss);
  CHECK(table.rows[1].report.n_images < table.rows[0].report.n_images);

  const auto text = format_table(table);
  CHECK(text.find("warning=") != std::string::npos);
  CHECK(text.find("shots\thit@1") != std::string::npos);
}

TEST_CASE("ablation rows follow the given values") {
  const auto data = synth_data(small_synth());
  const auto table = run_ablate(data, quick_run(), AblationAxis::Variant, {"flat", "full"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].value == "flat");
  CHECK(table.axis == "variant");
  const auto again = run_ablate(data, quick_run(), AblationAxis::Variant, {"full"});
  CHECK(again.rows[0].report.por == table.rows[1].report.por);
}

TEST_CASE("data directory round trip") {
  const auto sc = small_synth();
  const auto data = synth_data(sc);
  const auto dir = scratch("data");
  write_synth_dir(dir, sc, data);
  const auto back = load_data_dir(dir);
  REQUIRE(back.dag.node_count() == data.dag.node_count());
  for (std::size_t i = 0; i < data.dag.node_count(); ++i) {
    CHECK(back.dag.name(NodeId(i)) == data.dag.name(NodeId(i)));
  }
  CHECK(back.split.seen == data.split.seen);
  CHECK(back.split.unseen == data.split.unseen);
  CHECK(back.all.labels == data.all.labels);
  // Files hold float32 values; loading renormalizes.
  CHECK((back.all.images.values - data.all.images.values).cwiseAbs().maxCoeff() <= 1e-6);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint round trip") {
  const auto data = synth_data(small_synth());
  const auto cfg = quick_run();
  const auto r = run_zsl(data, cfg);
  const auto dir = scratch("ckpt");
  write_checkpoint(dir, data.dag, cfg, r.trained);
  const auto ck = read_checkpoint(dir);
  CHECK(ck.tau == r.trained.state.tau);
  CHECK(ck.node_params.values == as_float(r.trained.state.node_params.values));
  CHECK((ck.class_features.values - r.trained.class_features.values).cwiseAbs().maxCoeff() <= 1e-6);

  const auto parts = fewshot_extend(data.all, data.split, 0, cfg.train.seed);
  const auto report = evaluate(data.dag, parts.test, data.split, ck.class_features, ck.tau, cfg.eval);
  CHECK(std::abs(report.hit_at.at(1) - r.report.hit_at.at(1)) <= 0.02);
  CHECK(std::abs(report.por - r.report.por) <= 0.02);
  std::filesystem::remove_all(dir);

  try {
    read_checkpoint(scratch("missing"));
    FAIL("missing checkpoint accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
