#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "adgnn/augment.hpp"
#include "adgnn/gnn.hpp"
#include "adgnn/graph.hpp"
#include "adgnn/losses.hpp"

namespace adgnn::harness {

enum class Initializer { w2v_bilstm, w2v_ext_bilstm };
enum class FusionMode { none, concat, cross };

/// Everything a run needs. Defaults mirror the standard protocol (batch 20,
/// 30 epochs, lr 1e-3, epsilon 0.95, alpha/beta/gamma = 0.1/0.1/0.3,
/// lambda 0.5, 10 folds x 5 repeats); clippo_mode swaps in batch 4,
/// lr 1.5e-5, 100 epochs unless those fields are set explicitly.
struct ExperimentConfig {
  Initializer initializer = Initializer::w2v_bilstm;
  losses::GraphKind graph = losses::GraphKind::fused;
  gnn::GnnKind gnn_kind = gnn::GnnKind::sage;
  std::size_t gnn_layers = 2;
  FusionMode fusion = FusionMode::none;
  bool clippo_mode = false;

  std::size_t batch_size = 20;
  std::size_t epochs = 30;
  double lr = 0.001;
  std::uint64_t seed = 0;

  losses::RegWeights reg;
  losses::MultitaskWeights multitask;
  double epsilon = 0.95;
  double lambda = 0.5;
  graph::DependencyTerm dependency_term = graph::DependencyTerm::normalized_adjacency;
  bool row_normalize_dynamic = true;
  double temperature = 0.0;

  std::size_t bilstm_hidden = 150;  // per direction; encoder emits 2x this
  std::size_t mlp_hidden = 64;
  std::size_t fusion_dim = 128;
  std::size_t cross_layers = 2;
  std::size_t sample_size = 10;
  gnn::Aggregator aggregator = gnn::Aggregator::mean;
  gnn::Activation activation = gnn::Activation::relu;

  std::size_t folds = 10;
  std::size_t repeats = 5;
  bool stratify = true;

  std::optional<augment::AugmentPlan> augmentation;

  std::string word_vectors_path;
  std::optional<std::string> token_embeddings_path;
  std::optional<std::string> lexicon_path;
  std::optional<std::string> cf_vectors_path;
  std::optional<std::string> external_augmented_path;
};

/// Parses a config JSON object; unknown keys are an error. clippo defaults
/// are applied before explicit keys override them.
ExperimentConfig config_from_json(const std::string& json_text);

/// Full effective-value echo, deterministic key order.
std::string config_to_json(const ExperimentConfig& cfg);

/// Enumeration/bounds checks that need no data. Throws InvalidConfig.
void validate_config(const ExperimentConfig& cfg);

const char* to_string(Initializer v);
const char* to_string(FusionMode v);
const char* to_string(losses::GraphKind v);
const char* to_string(gnn::GnnKind v);
const char* to_string(gnn::Aggregator v);
const char* to_string(gnn::Activation v);
const char* to_string(graph::DependencyTerm v);
const char* to_string(augment::Method v);

}  // namespace adgnn::harness
