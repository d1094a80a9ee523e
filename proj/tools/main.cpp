#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "adgnn/augment.hpp"
#include "adgnn/gradcheck.hpp"
#include "adgnn/harness.hpp"
#include "adgnn/rng.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using namespace adgnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_error(ErrorKind::IoError, "cannot write " + path);
  os << content;
}

/// Config assembly: file values first, then command-line overrides.
struct ConfigFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> initializer, graph, gnn, fusion, aggregator, activation,
      dependency_term;
  std::optional<std::size_t> gnn_layers, batch_size, epochs, folds, repeats,
      sample_size, bilstm_hidden, mlp_hidden, fusion_dim, cross_layers;
  std::optional<double> lr, epsilon, lambda, alpha, beta, gamma, temperature;
  std::optional<std::uint64_t> seed;
  std::optional<bool> clippo, stratify;
  std::optional<std::string> word_vectors, token_embeddings, lexicon, cf_vectors,
      external_augmented;
  std::optional<std::string> augment_method;
  std::optional<double> augment_factor, augment_replace_rate;
  std::optional<std::size_t> augment_top_k;
  std::optional<std::uint64_t> augment_seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--initializer", initializer, "w2v_bilstm | w2v_ext_bilstm");
    cmd->add_option("--graph", graph, "dependency | dynamic | fused");
    cmd->add_option("--gnn", gnn, "sage | ggnn | none");
    cmd->add_option("--gnn-layers", gnn_layers, "number of GNN layers");
    cmd->add_option("--fusion", fusion, "none | concat | cross");
    cmd->add_option("--clippo", clippo, "contrastive multitask mode");
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--lr", lr);
    cmd->add_option("--seed", seed);
    cmd->add_option("--epsilon", epsilon, "similarity threshold");
    cmd->add_option("--lambda", lambda, "fusion mix");
    cmd->add_option("--alpha", alpha);
    cmd->add_option("--beta", beta);
    cmd->add_option("--gamma", gamma);
    cmd->add_option("--temperature", temperature);
    cmd->add_option("--dependency-term", dependency_term,
                    "normalized_adjacency | normalized_laplacian");
    cmd->add_option("--aggregator", aggregator, "mean | lstm");
    cmd->add_option("--activation", activation, "relu | sigmoid");
    cmd->add_option("--sample-size", sample_size, "neighbors sampled per node");
    cmd->add_option("--bilstm-hidden", bilstm_hidden);
    cmd->add_option("--mlp-hidden", mlp_hidden);
    cmd->add_option("--fusion-dim", fusion_dim);
    cmd->add_option("--cross-layers", cross_layers);
    cmd->add_option("--folds", folds);
    cmd->add_option("--repeats", repeats);
    cmd->add_option("--stratify", stratify);
    cmd->add_option("--word-vectors", word_vectors);
    cmd->add_option("--token-embeddings", token_embeddings);
    cmd->add_option("--lexicon", lexicon);
    cmd->add_option("--cf-vectors", cf_vectors);
    cmd->add_option("--external-augmented", external_augmented);
    cmd->add_option("--augment-method", augment_method,
                    "synonym | cf_embedding | sentence_delete | external");
    cmd->add_option("--augment-factor", augment_factor);
    cmd->add_option("--augment-replace-rate", augment_replace_rate);
    cmd->add_option("--augment-top-k", augment_top_k);
    cmd->add_option("--augment-seed", augment_seed);
  }

  harness::ExperimentConfig build() const {
    nlohmann::json doc = nlohmann::json::object();
    if (config_path) {
      doc = nlohmann::json::parse(read_file(*config_path));
      if (!doc.is_object()) throw_error(ErrorKind::InvalidConfig, "config must be an object");
    }
    auto set = [&](const char* key, const auto& opt) {
      if (opt) doc[key] = *opt;
    };
    set("initializer", initializer);
    set("graph", graph);
    set("gnn", gnn);
    set("gnn_layers", gnn_layers);
    set("fusion", fusion);
    set("clippo_mode", clippo);
    set("batch_size", batch_size);
    set("epochs", epochs);
    set("lr", lr);
    set("seed", seed);
    set("epsilon", epsilon);
    set("lambda", lambda);
    set("alpha", alpha);
    set("beta", beta);
    set("gamma", gamma);
    set("temperature", temperature);
    set("dependency_term", dependency_term);
    set("aggregator", aggregator);
    set("activation", activation);
    set("sample_size", sample_size);
    set("bilstm_hidden", bilstm_hidden);
    set("mlp_hidden", mlp_hidden);
    set("fusion_dim", fusion_dim);
    set("cross_layers", cross_layers);
    set("folds", folds);
    set("repeats", repeats);
    set("stratify", stratify);
    set("word_vectors", word_vectors);
    set("token_embeddings", token_embeddings);
    set("lexicon", lexicon);
    set("cf_vectors", cf_vectors);
    set("external_augmented", external_augmented);
    if (augment_method || augment_factor || augment_replace_rate || augment_top_k ||
        augment_seed) {
      nlohmann::json a = doc.contains("augment") ? doc["augment"] : nlohmann::json::object();
      if (augment_method) a["method"] = *augment_method;
      if (augment_factor) a["factor"] = *augment_factor;
      if (augment_replace_rate) a["replace_rate"] = *augment_replace_rate;
      if (augment_top_k) a["top_k"] = *augment_top_k;
      if (augment_seed) a["seed"] = *augment_seed;
      doc["augment"] = a;
    }
    return harness::config_from_json(doc.dump());
  }
};

int cmd_ingest(const std::string& manifest_path) {
  ingest::DatasetManifest manifest = ingest::load_manifest(manifest_path);
  harness::Dataset dataset = harness::load_dataset(manifest);
  std::size_t with_audio = 0, with_tts = 0, tokens = 0;
  for (const auto& s : dataset.samples) {
    if (!s.audio_feat.empty()) ++with_audio;
    if (!s.tts_feat.empty()) ++with_tts;
    tokens += s.transcript.tokens.size();
  }
  std::cout << "manifest ok: " << dataset.samples.size() << " samples, " << tokens
            << " tokens total, " << with_audio << " with audio features, " << with_tts
            << " with tts features\n";
  if (dataset.audio_dim) std::cout << "audio feature dim: " << dataset.audio_dim << "\n";
  if (dataset.tts_dim) std::cout << "tts feature dim: " << dataset.tts_dim << "\n";
  return kExitOk;
}

int cmd_augment(const std::string& manifest_path, const ConfigFlags& flags,
                const std::string& out_dir) {
  harness::ExperimentConfig cfg = flags.build();
  if (!cfg.augmentation) {
    throw_error(ErrorKind::InvalidConfig, "augment needs an augmentation plan");
  }
  ingest::DatasetManifest manifest = ingest::load_manifest(manifest_path);
  harness::Dataset dataset = harness::load_dataset(manifest);
  std::vector<model::Sample> expanded =
      harness::apply_augmentation(dataset.samples, cfg, manifest);

  fs::create_directories(out_dir);
  nlohmann::json out_manifest = nlohmann::json::array();
  std::unordered_map<std::string, const ingest::ManifestRow*> rows_by_id;
  for (const auto& row : manifest.rows) rows_by_id[row.sample_id] = &row;

  for (const model::Sample& s : expanded) {
    nlohmann::json row;
    row["sample_id"] = s.id;
    row["label"] = s.label;
    if (augment::base_id(s.id) == s.id) {
      auto absolute = [&](const std::string& p) {
        return fs::absolute(ingest::resolve_path(manifest, p)).lexically_normal().string();
      };
      const ingest::ManifestRow& orig = *rows_by_id.at(s.id);
      row["transcript_path"] = absolute(orig.transcript_path);
      row["conllu_path"] = absolute(orig.conllu_path);
      if (orig.audio_feat_path) row["audio_feat_path"] = absolute(*orig.audio_feat_path);
      if (orig.tts_feat_path) row["tts_feat_path"] = absolute(*orig.tts_feat_path);
    } else {
      std::string stem = s.id;
      for (char& c : stem) {
        if (c == '#' || c == '/') c = '_';
      }
      std::string transcript_rel = stem + ".cha";
      std::string conllu_rel = stem + ".conllu";
      write_file((fs::path(out_dir) / transcript_rel).string(),
                 ingest::render_transcript(s.transcript));
      std::ostringstream conllu;
      std::size_t sentence = 0;
      for (const auto& parse : augment::chain_parses(s.transcript)) {
        auto [b, e] = s.transcript.sentence_bounds[sentence++];
        for (std::size_t i = 0; i < parse.size(); ++i) {
          conllu << (i + 1) << "\t" << s.transcript.tokens[b + i]
                 << "\t_\t_\t_\t_\t" << (parse.head[i] + 1) << "\t"
                 << parse.relation[i] << "\t_\t_\n";
        }
        conllu << "\n";
        (void)e;
      }
      write_file((fs::path(out_dir) / conllu_rel).string(), conllu.str());
      row["transcript_path"] = transcript_rel;
      row["conllu_path"] = conllu_rel;
    }
    out_manifest.push_back(std::move(row));
  }
  std::string manifest_out = (fs::path(out_dir) / "manifest.json").string();
  write_file(manifest_out, out_manifest.dump(2) + "\n");
  std::cout << "wrote " << expanded.size() << " samples to " << manifest_out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& manifest_path, const ConfigFlags& flags,
              const std::string& out_path, const std::string& report_path) {
  harness::ExperimentConfig cfg = flags.build();
  ingest::DatasetManifest manifest = ingest::load_manifest(manifest_path);
  model::Resources resources = harness::load_resources(cfg);
  harness::Dataset dataset = harness::load_dataset(manifest);
  harness::validate_dataset(cfg, dataset);
  std::vector<model::Sample> split =
      harness::apply_augmentation(dataset.samples, cfg, manifest);
  harness::TrainResult result = harness::train(cfg, split, resources, cfg.seed);
  save_checkpoint(out_path, result.trained.named_params());
  std::cout << "trained on " << split.size() << " samples for " << cfg.epochs
            << " epochs; final mean batch loss "
            << result.trace.epoch_loss.back() << "\n";
  std::cout << "checkpoint written to " << out_path << "\n";
  if (!report_path.empty()) {
    nlohmann::json doc;
    doc["config"] = nlohmann::json::parse(harness::config_to_json(cfg));
    doc["epoch_loss"] = result.trace.epoch_loss;
    write_file(report_path, doc.dump(2) + "\n");
    std::cout << "loss history written to " << report_path << "\n";
  }
  return kExitOk;
}

int cmd_cv(const std::string& manifest_path, const ConfigFlags& flags,
           const std::string& out_path) {
  harness::ExperimentConfig cfg = flags.build();
  ingest::DatasetManifest manifest = ingest::load_manifest(manifest_path);
  harness::ExperimentReport report = harness::run_experiment(cfg, manifest);
  std::string json_text = harness::report_to_json(report);
  if (out_path.empty()) {
    std::cout << json_text << "\n";
  } else {
    write_file(out_path, json_text + "\n");
    std::cout.setf(std::ios::fixed);
    std::cout.precision(4);
    std::cout << "accuracy " << report.mean << " ± " << report.stddev << " over "
              << report.folds.size() << " folds; report written to " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_gradcheck(std::size_t seeds) {
  bool ok = harness::print_gradcheck_battery(std::cout, seeds);
  if (!ok) {
    std::cerr << "gradient checks failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_report(const std::string& path) {
  std::cout << harness::format_report(read_file(path));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-to-graph classification engine"};
  app.require_subcommand(1);

  std::string manifest_path, out_path, report_path, in_path;
  std::size_t gradcheck_seeds = 5;
  ConfigFlags flags;

  CLI::App* ingest_cmd = app.add_subcommand("ingest", "validate a dataset manifest");
  ingest_cmd->add_option("--manifest", manifest_path, "manifest JSON")->required();

  CLI::App* augment_cmd =
      app.add_subcommand("augment", "materialize an augmented dataset");
  augment_cmd->add_option("--manifest", manifest_path)->required();
  augment_cmd->add_option("--out", out_path, "output directory")->required();
  flags.add_to(augment_cmd);

  CLI::App* train_cmd = app.add_subcommand("train", "train on the full manifest");
  train_cmd->add_option("--manifest", manifest_path)->required();
  train_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_cmd->add_option("--loss-history", report_path, "optional loss history JSON");
  flags.add_to(train_cmd);

  CLI::App* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation protocol");
  cv_cmd->add_option("--manifest", manifest_path)->required();
  cv_cmd->add_option("--out", out_path, "report JSON path (stdout if omitted)");
  flags.add_to(cv_cmd);

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "run the numeric self-test suite");
  gradcheck_cmd->add_option("--seeds", gradcheck_seeds, "random seeds to sweep");

  CLI::App* report_cmd = app.add_subcommand("report", "pretty-print a report file");
  report_cmd->add_option("--in", in_path, "report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest_cmd->parsed()) return cmd_ingest(manifest_path);
    if (augment_cmd->parsed()) return cmd_augment(manifest_path, flags, out_path);
    if (train_cmd->parsed()) return cmd_train(manifest_path, flags, out_path, report_path);
    if (cv_cmd->parsed()) return cmd_cv(manifest_path, flags, out_path);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_seeds);
    if (report_cmd->parsed()) return cmd_report(in_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numeric_error(e.kind()) ? kExitNumeric : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
