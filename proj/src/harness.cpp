#include "adgnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "adgnn/rng.hpp"
#include "nlohmann/json.hpp"

using json = nlohmann::json;

namespace adgnn::harness {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

Dataset load_dataset(const ingest::DatasetManifest& manifest) {
  Dataset dataset;
  std::unordered_map<std::string, ingest::FeatureVectorTable> tables;
  auto table_for = [&](const std::string& resolved) -> const ingest::FeatureVectorTable& {
    auto it = tables.find(resolved);
    if (it == tables.end()) {
      it = tables.emplace(resolved, ingest::load_feature_vectors(resolved)).first;
    }
    return it->second;
  };
  auto fetch = [&](const std::string& resolved, const std::string& id) {
    const auto& table = table_for(resolved);
    auto it = table.vectors.find(id);
    if (it == table.vectors.end()) {
      throw_error(ErrorKind::MissingFeature, id + " not present in " + resolved);
    }
    return it->second;
  };

  for (const ingest::ManifestRow& row : manifest.rows) {
    model::Sample s;
    s.id = row.sample_id;
    s.label = row.label;
    s.transcript = ingest::parse_chat(read_file(ingest::resolve_path(manifest, row.transcript_path)));
    s.transcript.sample_id = row.sample_id;
    s.transcript.label = row.label;
    s.parses = ingest::parse_conllu(read_file(ingest::resolve_path(manifest, row.conllu_path)));
    if (row.audio_feat_path) {
      s.audio_feat = fetch(ingest::resolve_path(manifest, *row.audio_feat_path), row.sample_id);
      if (dataset.audio_dim == 0) dataset.audio_dim = s.audio_feat.size();
      if (s.audio_feat.size() != dataset.audio_dim) {
        throw_error(ErrorKind::DimensionMismatch, "audio dim differs for " + row.sample_id);
      }
    }
    if (row.tts_feat_path) {
      s.tts_feat = fetch(ingest::resolve_path(manifest, *row.tts_feat_path), row.sample_id);
      if (dataset.tts_dim == 0) dataset.tts_dim = s.tts_feat.size();
      if (s.tts_feat.size() != dataset.tts_dim) {
        throw_error(ErrorKind::DimensionMismatch, "tts dim differs for " + row.sample_id);
      }
    }
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

model::Resources load_resources(const ExperimentConfig& cfg) {
  model::Resources res;
  if (cfg.word_vectors_path.empty() && !cfg.clippo_mode) {
    throw_error(ErrorKind::InvalidConfig, "word_vectors path is required");
  }
  if (!cfg.word_vectors_path.empty()) {
    res.word_vectors = embed::load_word_vectors(cfg.word_vectors_path);
  }
  if (cfg.initializer == Initializer::w2v_ext_bilstm) {
    if (!cfg.token_embeddings_path) {
      throw_error(ErrorKind::InvalidConfig,
                  "w2v_ext_bilstm needs a token_embeddings path");
    }
    res.token_embeddings = embed::load_token_embeddings(*cfg.token_embeddings_path);
  }
  return res;
}

void validate_dataset(const ExperimentConfig& cfg, const Dataset& dataset) {
  if (dataset.samples.empty()) throw_error(ErrorKind::EmptySplit, "dataset has no samples");
  bool needs_audio = cfg.fusion != FusionMode::none || cfg.clippo_mode;
  bool needs_tts = cfg.clippo_mode;
  bool needs_parses = !cfg.clippo_mode && cfg.graph != losses::GraphKind::dynamic;
  for (const model::Sample& s : dataset.samples) {
    if (!cfg.clippo_mode && s.transcript.tokens.empty()) {
      throw_error(ErrorKind::EmptyGraph, "sample " + s.id + " has no usable tokens");
    }
    if (needs_audio && s.audio_feat.empty()) {
      throw_error(ErrorKind::MissingFeature,
                  "sample " + s.id + " lacks audio features required by the config");
    }
    if (needs_tts && s.tts_feat.empty()) {
      throw_error(ErrorKind::MissingFeature,
                  "sample " + s.id + " lacks tts features required by clippo_mode");
    }
    if (needs_parses) {
      if (s.parses.size() != s.transcript.sentence_bounds.size()) {
        throw_error(ErrorKind::AlignmentMismatch,
                    "sample " + s.id + ": parse count does not match sentences");
      }
      for (std::size_t i = 0; i < s.parses.size(); ++i) {
        auto [b, e] = s.transcript.sentence_bounds[i];
        if (s.parses[i].size() != e - b) {
          throw_error(ErrorKind::AlignmentMismatch,
                      "sample " + s.id + ": parse tokens do not match sentence " +
                          std::to_string(i));
        }
      }
    }
  }
  if (cfg.clippo_mode && dataset.tts_dim != dataset.audio_dim) {
    throw_error(ErrorKind::DimensionMismatch,
                "clippo_mode needs origin and tts features of one dimension, got " +
                    std::to_string(dataset.audio_dim) + " vs " +
                    std::to_string(dataset.tts_dim));
  }
  if (cfg.augmentation) {
    if (cfg.augmentation->method == augment::Method::synonym && !cfg.lexicon_path) {
      throw_error(ErrorKind::InvalidConfig, "synonym augmentation needs a lexicon path");
    }
    if (cfg.augmentation->method == augment::Method::cf_embedding && !cfg.cf_vectors_path) {
      throw_error(ErrorKind::InvalidConfig, "cf_embedding augmentation needs cf_vectors");
    }
    if (cfg.augmentation->method == augment::Method::external &&
        !cfg.external_augmented_path) {
      throw_error(ErrorKind::InvalidConfig, "external augmentation needs a rows file");
    }
  }
}

std::vector<FoldAssignment> split_kfold(const std::vector<int>& labels, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed,
                                        bool stratify) {
  std::size_t n = labels.size();
  if (k < 2) throw_error(ErrorKind::InvalidConfig, "k must be >= 2");
  if (repeats < 1) throw_error(ErrorKind::InvalidConfig, "repeats must be >= 1");
  if (n < k) {
    throw_error(ErrorKind::TooFewSamples,
                std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  }

  std::vector<FoldAssignment> out;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    std::mt19937_64 rng(mix_seed(seed, rep));
    FoldAssignment assignment;
    assignment.test_folds.assign(k, {});
    if (stratify) {
      // per class: seeded shuffle, then round-robin continuing from the fold
      // the previous class stopped at, so overall sizes stay near-equal
      std::size_t offset = 0;
      for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
          if (labels[i] == cls) members.push_back(i);
        rng_shuffle(rng, members);
        for (std::size_t j = 0; j < members.size(); ++j) {
          assignment.test_folds[(offset + j) % k].push_back(members[j]);
        }
        offset = (offset + members.size()) % k;
      }
    } else {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng_shuffle(rng, order);
      // contiguous chunks; the first n % k folds absorb the remainder
      std::size_t base = n / k, extra = n % k, cursor = 0;
      for (std::size_t f = 0; f < k; ++f) {
        std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j)
          assignment.test_folds[f].push_back(order[cursor++]);
      }
    }
    for (auto& fold : assignment.test_folds) std::sort(fold.begin(), fold.end());
    out.push_back(std::move(assignment));
  }
  return out;
}

std::vector<FoldAssignment> split_kfold(const Dataset& dataset, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed,
                                        bool stratify) {
  std::vector<int> labels;
  labels.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) labels.push_back(s.label);
  return split_kfold(labels, k, repeats, seed, stratify);
}

TrainResult train(const ExperimentConfig& cfg,
                  const std::vector<model::Sample>& train_split,
                  const model::Resources& resources, std::uint64_t seed,
                  bool record_train_accuracy) {
  if (train_split.empty()) throw_error(ErrorKind::EmptySplit, "empty training split");

  std::size_t input_dim = resources.word_vectors.dim;
  if (cfg.initializer == Initializer::w2v_ext_bilstm) {
    input_dim += resources.token_embeddings.dim;
  }
  std::size_t audio_dim = 0;
  for (const auto& s : train_split) {
    if (!s.audio_feat.empty()) {
      audio_dim = s.audio_feat.size();
      break;
    }
  }

  std::mt19937_64 rng(mix_seed(seed, 0xADC0DEULL));
  TrainResult result{model::build_model(cfg, input_dim, audio_dim, rng), {}};
  model::Model& m = result.trained;
  std::vector<Tensor> params = m.trainable_params();

  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng_shuffle(rng, order);
    double epoch_loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t len = std::min(cfg.batch_size, order.size() - start);
      std::vector<const model::Sample*> batch;
      std::vector<std::string> batch_ids;
      for (std::size_t j = 0; j < len; ++j) {
        batch.push_back(&train_split[order[start + j]]);
        batch_ids.push_back(batch.back()->id);
      }

      Tape tape;
      Tensor loss;
      try {
        TapeScope scope(tape);
        if (cfg.clippo_mode) {
          loss = model::clippo_batch_loss(m, batch);
        } else {
          Tensor acc;
          for (const model::Sample* s : batch) {
            Tensor one = model::text_sample_loss(m, *s, resources, rng);
            acc = acc.defined() ? add(acc, one) : one;
          }
          loss = scale(acc, 1.0 / static_cast<double>(len));
        }
        tape.backward(loss);
      } catch (const Error& e) {
        if (is_numeric_error(e.kind())) {
          std::string ids;
          for (const auto& id : batch_ids) ids += (ids.empty() ? "" : ",") + id;
          std::string message = e.what();
          std::string prefix = std::string(error_kind_name(e.kind())) + ": ";
          if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
          throw Error(e.kind(), message + " (epoch " + std::to_string(epoch) +
                                    ", samples " + ids + ")");
        }
        throw;
      }
      sgd_step(params, cfg.lr);
      epoch_loss_sum += loss.item();
      ++batches;
      result.trace.batch_sample_ids.push_back(std::move(batch_ids));
    }
    result.trace.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(batches));
    if (record_train_accuracy) {
      result.trace.epoch_train_accuracy.push_back(
          evaluate(m, train_split, resources, mix_seed(seed, 0xACC0ULL + epoch)));
    }
  }
  return result;
}

double evaluate(const model::Model& m, const std::vector<model::Sample>& test_split,
                const model::Resources& resources, std::uint64_t seed) {
  if (test_split.empty()) throw_error(ErrorKind::EmptySplit, "empty test split");
  std::size_t correct = 0;
  for (const model::Sample& s : test_split) {
    // per-sample stream so scoring one sample never shifts another's draws
    std::mt19937_64 rng(mix_seed(seed, fnv1a64(s.id)));
    Tensor logits = m.config.clippo_mode
                        ? model::clippo_logits(m, s)
                        : model::forward_text(m, s, resources, rng).logits;
    if (model::predict_label(logits) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_split.size());
}

std::vector<model::Sample> apply_augmentation(const std::vector<model::Sample>& train,
                                              const ExperimentConfig& cfg,
                                              const ingest::DatasetManifest& manifest) {
  if (!cfg.augmentation) return train;
  const augment::AugmentPlan& plan = *cfg.augmentation;

  augment::SynonymLexicon lexicon;
  embed::WordVectorTable cf_table;
  std::vector<ingest::Transcript> external;
  augment::AugmentResources aug_res;
  if (plan.method == augment::Method::synonym) {
    if (!cfg.lexicon_path) throw_error(ErrorKind::InvalidConfig, "lexicon path missing");
    lexicon = augment::load_synonym_lexicon(*cfg.lexicon_path);
    aug_res.lexicon = &lexicon;
  } else if (plan.method == augment::Method::cf_embedding) {
    if (!cfg.cf_vectors_path) throw_error(ErrorKind::InvalidConfig, "cf_vectors missing");
    cf_table = embed::load_word_vectors(*cfg.cf_vectors_path);
    aug_res.cf_table = &cf_table;
  } else if (plan.method == augment::Method::external) {
    if (!cfg.external_augmented_path) {
      throw_error(ErrorKind::InvalidConfig, "external_augmented missing");
    }
    external = augment::ingest_external_augmented(
        augment::load_external_rows(*cfg.external_augmented_path), manifest);
    aug_res.external = &external;
  }
  std::vector<augment::AugmentSample> split;
  split.reserve(train.size());
  for (const model::Sample& s : train) {
    augment::AugmentSample a;
    a.transcript = s.transcript;
    split.push_back(std::move(a));
  }
  std::vector<augment::AugmentSample> expanded =
      augment::augment_dataset(split, plan, aug_res);

  std::unordered_map<std::string, const model::Sample*> originals;
  for (const model::Sample& s : train) originals[s.id] = &s;

  bool needs_parses = cfg.graph != losses::GraphKind::dynamic;
  std::vector<model::Sample> out;
  out.reserve(expanded.size());
  for (const augment::AugmentSample& a : expanded) {
    if (!a.augmented) {
      out.push_back(*originals.at(a.transcript.sample_id));
      continue;
    }
    model::Sample s;
    s.id = a.transcript.sample_id;
    s.label = a.transcript.label;
    s.transcript = a.transcript;
    if (needs_parses) s.parses = augment::chain_parses(a.transcript);
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const ingest::DatasetManifest& manifest) {
  auto t0 = std::chrono::steady_clock::now();
  validate_config(cfg);
  model::Resources resources = load_resources(cfg);
  Dataset dataset = load_dataset(manifest);
  validate_dataset(cfg, dataset);

  std::vector<FoldAssignment> assignments =
      split_kfold(dataset, cfg.folds, cfg.repeats, cfg.seed, cfg.stratify);

  ExperimentReport report;
  report.config = cfg;
  for (std::size_t rep = 0; rep < assignments.size(); ++rep) {
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      const std::vector<std::size_t>& test_idx = assignments[rep].test_folds[f];
      std::unordered_set<std::size_t> in_test(test_idx.begin(), test_idx.end());
      std::vector<model::Sample> train_split, test_split;
      for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        (in_test.count(i) ? test_split : train_split).push_back(dataset.samples[i]);
      }
      train_split = apply_augmentation(train_split, cfg, manifest);

      // leakage guard: nothing in the (augmented) training split may share a
      // base id with the active test fold
      std::unordered_set<std::string> test_ids;
      for (const auto& s : test_split) test_ids.insert(s.id);
      for (const auto& s : train_split) {
        if (test_ids.count(augment::base_id(s.id))) {
          throw_error(ErrorKind::InvalidConfig,
                      "training sample " + s.id +
                          " shares a base sample with the test fold; augment "
                          "training folds via the augment plan, not a "
                          "pre-materialized manifest");
        }
      }

      std::uint64_t fold_seed = mix_seed(mix_seed(cfg.seed, rep), f);
      TrainResult trained = train(cfg, train_split, resources, fold_seed);
      double acc = evaluate(trained.trained, test_split, resources,
                            mix_seed(fold_seed, 0xE7A1ULL));
      FoldOutcome outcome;
      outcome.repeat = rep;
      outcome.fold = f;
      outcome.accuracy = acc;
      for (const auto& s : test_split) outcome.test_ids.push_back(s.id);
      outcome.trace = std::move(trained.trace);
      report.folds.push_back(std::move(outcome));
    }
  }

  double sum = 0.0;
  for (const auto& fo : report.folds) sum += fo.accuracy;
  report.mean = sum / static_cast<double>(report.folds.size());
  double var = 0.0;
  for (const auto& fo : report.folds) {
    double d = fo.accuracy - report.mean;
    var += d * d;
  }
  report.stddev = std::sqrt(var / static_cast<double>(report.folds.size()));
  report.wall_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return report;
}

std::string report_to_json(const ExperimentReport& report, bool include_wall_ms) {
  json doc;
  doc["config"] = json::parse(config_to_json(report.config));
  doc["seed"] = report.config.seed;
  json folds = json::array();
  for (const auto& fo : report.folds) {
    folds.push_back({{"repeat", fo.repeat}, {"fold", fo.fold}, {"accuracy", fo.accuracy}});
  }
  doc["folds"] = std::move(folds);
  doc["mean"] = report.mean;
  doc["std"] = report.stddev;
  if (include_wall_ms) doc["wall_ms"] = report.wall_ms;
  return doc.dump(2);
}

std::string format_report(const std::string& report_json) {
  json doc;
  try {
    doc = json::parse(report_json);
  } catch (const json::exception& e) {
    throw_error(ErrorKind::IoError, std::string("report: ") + e.what());
  }
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "accuracy " << doc.at("mean").get<double>() << " ± "
     << doc.at("std").get<double>() << " over " << doc.at("folds").size()
     << " folds (seed " << doc.at("seed").get<std::uint64_t>() << ")\n";
  const json& cfg = doc.at("config");
  os << "config: initializer=" << cfg.at("initializer").get<std::string>()
     << " graph=" << cfg.at("graph").get<std::string>()
     << " gnn=" << cfg.at("gnn").get<std::string>()
     << " layers=" << cfg.at("gnn_layers").get<std::size_t>()
     << " fusion=" << cfg.at("fusion").get<std::string>()
     << " clippo=" << (cfg.at("clippo_mode").get<bool>() ? "yes" : "no") << "\n";
  os << "repeat fold accuracy\n";
  for (const json& row : doc.at("folds")) {
    os << "  " << row.at("repeat").get<std::size_t>() << "    "
       << row.at("fold").get<std::size_t>() << "    "
       << row.at("accuracy").get<double>() << "\n";
  }
  if (doc.contains("wall_ms")) {
    os << "wall time: " << doc.at("wall_ms").get<std::uint64_t>() << " ms\n";
  }
  return os.str();
}

}  // namespace adgnn::harness
