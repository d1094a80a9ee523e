#include "adgnn/harness.hpp"

#include <fstream>

#include "adgnn/gradcheck.hpp"
#include "doctest.h"
#include "test_support.hpp"
#include "toy_data.hpp"

using namespace adgnn;

namespace {

harness::ExperimentConfig tiny_config(const toy_data::ToyCorpus& corpus) {
  harness::ExperimentConfig cfg;
  cfg.word_vectors_path = corpus.word_vectors_path;
  cfg.bilstm_hidden = 3;  // embeddings of dim 6: fast toy runs
  cfg.mlp_hidden = 4;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.gnn_layers = 1;
  cfg.folds = 2;
  cfg.repeats = 1;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("split_kfold with n == k gives singleton folds") {
  std::vector<int> labels(10);
  for (std::size_t i = 0; i < 10; ++i) labels[i] = static_cast<int>(i % 2);
  auto assignments = harness::split_kfold(labels, 10, 1, 5, true);
  REQUIRE(assignments.size() == 1);
  for (const auto& fold : assignments[0].test_folds) CHECK(fold.size() == 1);
}

TEST_CASE("split_kfold remainder rule keeps sizes near-equal") {
  std::vector<int> labels(11);
  for (std::size_t i = 0; i < 11; ++i) labels[i] = static_cast<int>(i % 2);
  for (bool stratify : {true, false}) {
    auto assignments = harness::split_kfold(labels, 10, 1, 5, stratify);
    std::size_t twos = 0, ones = 0, total = 0;
    for (const auto& fold : assignments[0].test_folds) {
      total += fold.size();
      if (fold.size() == 2) ++twos;
      if (fold.size() == 1) ++ones;
    }
    CHECK(total == 11);
    CHECK(twos == 1);
    CHECK(ones == 9);
  }
}

TEST_CASE("split_kfold covers every sample exactly once per repeat") {
  std::vector<int> labels(23);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  auto assignments = harness::split_kfold(labels, 5, 3, 7, true);
  REQUIRE(assignments.size() == 3);
  for (const auto& repeat : assignments) {
    std::vector<bool> seen(labels.size(), false);
    for (const auto& fold : repeat.test_folds) {
      for (std::size_t idx : fold) {
        CHECK_FALSE(seen[idx]);
        seen[idx] = true;
      }
    }
    for (bool s : seen) CHECK(s);
  }
}

TEST_CASE("stratified folds balance the label mix") {
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < 20; ++i) labels[i] = i < 10 ? 0 : 1;
  auto assignments = harness::split_kfold(labels, 5, 1, 3, true);
  for (const auto& fold : assignments[0].test_folds) {
    std::size_t zeros = 0, ones = 0;
    for (std::size_t idx : fold) (labels[idx] == 0 ? zeros : ones)++;
    CHECK(zeros == 2);
    CHECK(ones == 2);
  }
}

TEST_CASE("split_kfold is deterministic under seed") {
  std::vector<int> labels(17);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  auto a = harness::split_kfold(labels, 4, 2, 99, true);
  auto b = harness::split_kfold(labels, 4, 2, 99, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].test_folds == b[r].test_folds);
  }
}

TEST_CASE("too few samples for k folds is an error") {
  std::vector<int> labels = {0, 1, 0};
  try {
    harness::split_kfold(labels, 10, 1, 1, true);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewSamples);
  }
}

TEST_CASE("training with lr 0 leaves parameters at their init") {
  test_support::TempDir dir("lr0");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  cfg.lr = 0.0;
  model::Resources res = harness::load_resources(cfg);
  harness::Dataset dataset = harness::load_dataset(ingest::load_manifest(corpus.manifest_path));

  cfg.epochs = 1;
  auto one = harness::train(cfg, dataset.samples, res, 42);
  cfg.epochs = 4;
  auto four = harness::train(cfg, dataset.samples, res, 42);
  auto p1 = one.trained.named_params();
  auto p4 = four.trained.named_params();
  REQUIRE(p1.size() == p4.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].second.values() == p4[i].second.values());
  }
}

TEST_CASE("identical seeds give bitwise-identical checkpoints") {
  test_support::TempDir dir("det");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  model::Resources res = harness::load_resources(cfg);
  harness::Dataset dataset = harness::load_dataset(ingest::load_manifest(corpus.manifest_path));

  auto run = [&](const std::string& name) {
    auto result = harness::train(cfg, dataset.samples, res, 7);
    std::string path = dir.path(name);
    save_checkpoint(path, result.trained.named_params());
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(run("a.ckpt") == run("b.ckpt"));
}

TEST_CASE("evaluate counts argmax hits with ties toward class 0") {
  CHECK(model::predict_label(Tensor::vector({0, 0})) == 0);
  CHECK(model::predict_label(Tensor::vector({0.2, 0.7})) == 1);

  // zeroed clippo model emits logits (0, 0) for every sample
  model::Model m;
  m.config.clippo_mode = true;
  model::ClippoModel c;
  c.extractor = Tensor::zeros({2, 3}, true);
  c.head.w1 = Tensor::zeros({2, 2}, true);
  c.head.b1 = Tensor::zeros({2}, true);
  c.head.w2 = Tensor::zeros({2, 2}, true);
  c.head.b2 = Tensor::zeros({2}, true);
  m.clippo = std::move(c);

  std::vector<model::Sample> split(4);
  for (std::size_t i = 0; i < 4; ++i) {
    split[i].id = "t" + std::to_string(i);
    split[i].label = i < 3 ? 0 : 1;  // ties predict 0: three of four correct
    split[i].audio_feat = {0.1, 0.2, 0.3};
  }
  model::Resources res;
  CHECK(harness::evaluate(m, split, res, 1) == doctest::Approx(0.75));

  split.resize(3);  // all labeled 0
  CHECK(harness::evaluate(m, split, res, 1) == doctest::Approx(1.0));

  try {
    harness::evaluate(m, {}, res, 1);
    FAIL("expected EmptySplit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySplit);
  }
}

TEST_CASE("toy cross-validation completes with a coherent report") {
  test_support::TempDir dir("cv");
  toy_data::ToyOptions opt;
  opt.n_samples = 8;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  ingest::DatasetManifest manifest = ingest::load_manifest(corpus.manifest_path);

  harness::ExperimentReport report = harness::run_experiment(cfg, manifest);
  REQUIRE(report.folds.size() == 2);
  double expected_mean = (report.folds[0].accuracy + report.folds[1].accuracy) / 2.0;
  CHECK(report.mean == doctest::Approx(expected_mean).epsilon(1e-12));
  for (const auto& fold : report.folds) {
    CHECK(fold.accuracy >= 0.0);
    CHECK(fold.accuracy <= 1.0);
  }

  // std is the population standard deviation, recomputable from the report
  double var = 0.0;
  for (const auto& fold : report.folds) {
    double d = fold.accuracy - report.mean;
    var += d * d;
  }
  CHECK(report.stddev == doctest::Approx(std::sqrt(var / 2.0)).epsilon(1e-12));
}

TEST_CASE("fusion without audio features fails validation before training") {
  test_support::TempDir dir("noaudio");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  cfg.fusion = harness::FusionMode::concat;
  ingest::DatasetManifest manifest = ingest::load_manifest(corpus.manifest_path);
  try {
    harness::run_experiment(cfg, manifest);
    FAIL("expected MissingFeature");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingFeature);
  }
}

TEST_CASE("reports serialize identically for identical runs") {
  test_support::TempDir dir("repdet");
  toy_data::ToyOptions opt;
  opt.n_samples = 8;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  ingest::DatasetManifest manifest = ingest::load_manifest(corpus.manifest_path);
  std::string a = harness::report_to_json(harness::run_experiment(cfg, manifest), false);
  std::string b = harness::report_to_json(harness::run_experiment(cfg, manifest), false);
  CHECK(a == b);
}

TEST_CASE("config json round-trips and rejects unknown keys") {
  harness::ExperimentConfig cfg;
  cfg.word_vectors_path = "vectors.txt";
  cfg.seed = 17;
  std::string text = harness::config_to_json(cfg);
  harness::ExperimentConfig back = harness::config_from_json(text);
  CHECK(harness::config_to_json(back) == text);

  CHECK_THROWS_AS(harness::config_from_json(R"({"surprise": 1})"), Error);
  CHECK_THROWS_AS(harness::config_from_json(R"({"graph": "alien"})"), Error);
}

TEST_CASE("clippo_mode swaps in its own defaults unless overridden") {
  harness::ExperimentConfig cfg = harness::config_from_json(R"({"clippo_mode": true})");
  CHECK(cfg.batch_size == 4);
  CHECK(cfg.epochs == 100);
  CHECK(cfg.lr == doctest::Approx(1.5e-5));

  harness::ExperimentConfig overridden =
      harness::config_from_json(R"({"clippo_mode": true, "batch_size": 16})");
  CHECK(overridden.batch_size == 16);
  CHECK(overridden.epochs == 100);
}

TEST_CASE("clippo training runs on audio and tts features") {
  test_support::TempDir dir("clippo");
  toy_data::ToyOptions opt;
  opt.n_samples = 8;
  opt.with_audio = true;
  opt.with_tts = true;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);

  harness::ExperimentConfig cfg;
  cfg.clippo_mode = true;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.lr = 1e-3;
  cfg.fusion_dim = 4;
  cfg.mlp_hidden = 4;
  cfg.folds = 2;
  cfg.repeats = 1;
  cfg.seed = 3;
  cfg.word_vectors_path = corpus.word_vectors_path;

  ingest::DatasetManifest manifest = ingest::load_manifest(corpus.manifest_path);
  harness::ExperimentReport report = harness::run_experiment(cfg, manifest);
  CHECK(report.folds.size() == 2);
  for (const auto& fold : report.folds) {
    CHECK(fold.accuracy >= 0.0);
    CHECK(fold.accuracy <= 1.0);
  }
}

TEST_CASE("multimodal fusion trains end to end") {
  test_support::TempDir dir("fusion");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  opt.with_audio = true;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  cfg.fusion = harness::FusionMode::cross;
  cfg.fusion_dim = 4;
  cfg.cross_layers = 2;
  cfg.epochs = 1;
  model::Resources res = harness::load_resources(cfg);
  harness::Dataset dataset = harness::load_dataset(ingest::load_manifest(corpus.manifest_path));
  auto result = harness::train(cfg, dataset.samples, res, 5);
  CHECK(result.trace.epoch_loss.size() == 1);
  double acc = harness::evaluate(result.trained, dataset.samples, res, 9);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("checkpoints reload into a rebuilt model") {
  test_support::TempDir dir("reload");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  harness::ExperimentConfig cfg = tiny_config(corpus);
  model::Resources res = harness::load_resources(cfg);
  harness::Dataset dataset = harness::load_dataset(ingest::load_manifest(corpus.manifest_path));
  auto result = harness::train(cfg, dataset.samples, res, 21);
  std::string path = dir.path("m.ckpt");
  save_checkpoint(path, result.trained.named_params());

  std::mt19937_64 rng(999);
  model::Model fresh = model::build_model(cfg, res.word_vectors.dim, 0, rng);
  model::load_params(fresh, load_checkpoint(path));
  double a = harness::evaluate(result.trained, dataset.samples, res, 4);
  double b = harness::evaluate(fresh, dataset.samples, res, 4);
  CHECK(a == b);
}

TEST_CASE("every graph/gnn combination trains end to end") {
  test_support::TempDir dir("matrix");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  model::Resources res;
  harness::Dataset dataset = harness::load_dataset(ingest::load_manifest(corpus.manifest_path));

  struct Case {
    losses::GraphKind graph;
    gnn::GnnKind kind;
    gnn::Aggregator agg;
    graph::DependencyTerm term;
  };
  std::vector<Case> cases = {
      {losses::GraphKind::dependency, gnn::GnnKind::sage, gnn::Aggregator::mean,
       graph::DependencyTerm::normalized_adjacency},
      {losses::GraphKind::dependency, gnn::GnnKind::ggnn, gnn::Aggregator::mean,
       graph::DependencyTerm::normalized_adjacency},
      {losses::GraphKind::dynamic, gnn::GnnKind::sage, gnn::Aggregator::lstm,
       graph::DependencyTerm::normalized_adjacency},
      {losses::GraphKind::dynamic, gnn::GnnKind::none, gnn::Aggregator::mean,
       graph::DependencyTerm::normalized_adjacency},
      {losses::GraphKind::fused, gnn::GnnKind::ggnn, gnn::Aggregator::mean,
       graph::DependencyTerm::normalized_laplacian},
      {losses::GraphKind::fused, gnn::GnnKind::sage, gnn::Aggregator::mean,
       graph::DependencyTerm::normalized_laplacian},
  };
  for (const Case& c : cases) {
    CAPTURE(static_cast<int>(c.graph));
    CAPTURE(static_cast<int>(c.kind));
    harness::ExperimentConfig cfg = tiny_config(corpus);
    cfg.graph = c.graph;
    cfg.gnn_kind = c.kind;
    cfg.gnn_layers = c.kind == gnn::GnnKind::none ? 1 : 2;
    cfg.aggregator = c.agg;
    cfg.dependency_term = c.term;
    cfg.epochs = 1;
    if (!res.word_vectors.dim) res = harness::load_resources(cfg);
    auto result = harness::train(cfg, dataset.samples, res, 13);
    CHECK(result.trace.epoch_loss.size() == 1);
    double acc = harness::evaluate(result.trained, dataset.samples, res, 13);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
}

TEST_CASE("external token embeddings feed the concatenation path") {
  test_support::TempDir dir("ext");
  toy_data::ToyOptions opt;
  opt.n_samples = 6;
  toy_data::ToyCorpus corpus = make_toy_corpus(dir, opt);
  ingest::DatasetManifest manifest = ingest::load_manifest(corpus.manifest_path);
  harness::Dataset dataset = harness::load_dataset(manifest);

  // one embedding row per token, keyed by sample id
  std::ostringstream rows;
  std::mt19937_64 rng(55);
  for (const auto& s : dataset.samples) {
    for (std::size_t t = 0; t < s.transcript.tokens.size(); ++t) {
      rows << s.id << "\t" << t;
      for (int c = 0; c < 3; ++c) rows << (c ? " " : "\t") << rng_uniform(rng, -1, 1);
      rows << "\n";
    }
  }
  std::string ext_path = dir.file("token_embeddings.tsv", rows.str());

  harness::ExperimentConfig cfg = tiny_config(corpus);
  cfg.initializer = harness::Initializer::w2v_ext_bilstm;
  cfg.token_embeddings_path = ext_path;
  cfg.epochs = 1;
  model::Resources res = harness::load_resources(cfg);
  CHECK(res.token_embeddings.dim == 3);
  auto result = harness::train(cfg, dataset.samples, res, 2);
  CHECK(result.trace.epoch_loss.size() == 1);
  double acc = harness::evaluate(result.trained, dataset.samples, res, 2);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  // a sample missing its rows is a hard error
  harness::ExperimentConfig broken = cfg;
  broken.token_embeddings_path = dir.file("short.tsv", "s0\t0\t1 2 3\n");
  model::Resources broken_res = harness::load_resources(broken);
  CHECK_THROWS_AS(harness::train(broken, dataset.samples, broken_res, 2), Error);
}

TEST_CASE("gradcheck battery passes across seeds") {
  auto results = harness::run_gradcheck_battery(2);
  CHECK(results.size() > 30);
  for (const auto& r : results) {
    INFO(r.name, " err=", r.max_rel_err);
    CHECK(r.pass);
  }
}
