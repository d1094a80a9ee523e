#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adgnn/model.hpp"

namespace adgnn::harness {

struct Dataset {
  std::vector<model::Sample> samples;
  std::size_t audio_dim = 0;
  std::size_t tts_dim = 0;
};

/// Materializes every manifest row: transcript parsed and labeled, CoNLL-U
/// parses aligned, feature vectors resolved.
Dataset load_dataset(const ingest::DatasetManifest& manifest);

model::Resources load_resources(const ExperimentConfig& cfg);

/// Config-vs-data checks that need the dataset (audio present for fusion,
/// tts for clippo, parses aligned for dependency terms, non-empty tokens).
void validate_dataset(const ExperimentConfig& cfg, const Dataset& dataset);

/// One repeat's partition: test_folds[f] holds the sorted sample indices of
/// fold f.
struct FoldAssignment {
  std::vector<std::vector<std::size_t>> test_folds;
};

/// Seeded shuffles partitioned into k near-equal folds, one assignment per
/// repeat. Stratified assignment keeps the label mix per fold; fold sizes
/// differ by at most one either way.
std::vector<FoldAssignment> split_kfold(const std::vector<int>& labels, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed,
                                        bool stratify);
std::vector<FoldAssignment> split_kfold(const Dataset& dataset, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed,
                                        bool stratify = true);

struct TrainTrace {
  std::vector<std::vector<std::string>> batch_sample_ids;  // per optimizer step
  std::vector<double> epoch_loss;                          // mean batch loss
  std::vector<double> epoch_train_accuracy;                // only when requested
};

struct TrainResult {
  model::Model trained;
  TrainTrace trace;
};

/// Minibatch SGD over the configured objective, deterministic under seed.
/// Augmentation is the caller's job: train consumes the split as given.
/// record_train_accuracy additionally scores the training split after every
/// epoch.
TrainResult train(const ExperimentConfig& cfg,
                  const std::vector<model::Sample>& train_split,
                  const model::Resources& resources, std::uint64_t seed,
                  bool record_train_accuracy = false);

/// Fraction of argmax-correct predictions; ties predict class 0.
double evaluate(const model::Model& m, const std::vector<model::Sample>& test_split,
                const model::Resources& resources, std::uint64_t seed);

/// Applies the config's augmentation plan to a training split (originals
/// retained, labels inherited, chain parses synthesized where a dependency
/// term is needed).
std::vector<model::Sample> apply_augmentation(const std::vector<model::Sample>& train,
                                              const ExperimentConfig& cfg,
                                              const ingest::DatasetManifest& manifest);

struct FoldOutcome {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  double accuracy = 0.0;
  std::vector<std::string> test_ids;  // in-memory only, for leakage audits
  TrainTrace trace;                   // likewise
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<FoldOutcome> folds;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over fold accuracies
  std::uint64_t wall_ms = 0;
};

/// The full protocol: per repeat, split into folds; per fold, augment the
/// training split only, train, evaluate. Deterministic under (config, seed).
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const ingest::DatasetManifest& manifest);

/// Report schema: {config, seed, folds:[{repeat, fold, accuracy}], mean,
/// std, wall_ms}. Identical runs serialize byte-identically apart from
/// wall_ms (dropped when include_wall_ms is false).
std::string report_to_json(const ExperimentReport& report, bool include_wall_ms = true);

/// Human-readable rendering of a report JSON file ("mean ± std" plus a
/// per-fold table).
std::string format_report(const std::string& report_json);

}  // namespace adgnn::harness
