#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adgnn/config.hpp"
#include "adgnn/embed.hpp"
#include "adgnn/heads.hpp"

namespace adgnn::model {

/// One dataset record, fully materialized.
struct Sample {
  std::string id;
  int label = -1;
  ingest::Transcript transcript;
  std::vector<ingest::DependencyParse> parses;  // empty in dynamic-only runs
  std::vector<double> audio_feat;
  std::vector<double> tts_feat;
};

/// Shared immutable lookup tables.
struct Resources {
  embed::WordVectorTable word_vectors;
  embed::TokenEmbeddingTable token_embeddings;
};

struct TextModel {
  embed::BiLstmParams bilstm;
  graph::GraphLearnerParams learner;  // valid when the config learns a graph
  bool has_learner = false;
  gnn::GnnStack stack;
  heads::ProjectionParams projection;
  bool has_projection = false;
  heads::CrossNetParams cross;
  heads::MlpParams mlp;
};

/// Shared linear feature extractor over audio vectors plus one
/// classification head, used for both the origin and TTS branches.
struct ClippoModel {
  Tensor extractor;  // (d_c, d_audio)
  heads::MlpParams head;
};

struct Model {
  harness::ExperimentConfig config;
  std::optional<TextModel> text;
  std::optional<ClippoModel> clippo;

  /// Canonical (name, tensor) list; the checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> trainable_params() const;
};

/// Builds and seeds all parameters the config calls for. input_dim is the
/// token embedding dim entering the BiLSTM; audio_dim may be 0 when unused.
Model build_model(const harness::ExperimentConfig& cfg, std::size_t input_dim,
                  std::size_t audio_dim, std::mt19937_64& rng);

/// Restores parameter values from checkpoint entries (shape-checked by name).
void load_params(Model& m, const std::vector<std::pair<std::string, Tensor>>& entries);

struct TextForward {
  Tensor logits;         // (2)
  Tensor h0;             // (n, d) initial node embeddings
  Tensor reg_adjacency;  // learned adjacency feeding the regularizer; may be undefined
};

TextForward forward_text(const Model& m, const Sample& sample,
                         const Resources& resources, std::mt19937_64& rng);

/// Classification + graph-regularization loss for one sample.
Tensor text_sample_loss(const Model& m, const Sample& sample,
                        const Resources& resources, std::mt19937_64& rng);

/// Multitask loss over a clippo batch (contrastive + both branch CEs).
Tensor clippo_batch_loss(const Model& m, const std::vector<const Sample*>& batch);

/// Origin-branch logits used at evaluation time.
Tensor clippo_logits(const Model& m, const Sample& sample);

/// Argmax with ties broken toward class 0.
int predict_label(const Tensor& logits);

}  // namespace adgnn::model
