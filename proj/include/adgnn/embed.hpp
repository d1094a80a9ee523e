#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "adgnn/tensor.hpp"

namespace adgnn::embed {

/// token -> word vector, uniform dimension.
struct WordVectorTable {
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t dim = 0;
};

/// Per-token external embeddings keyed by sample id (drop-in for a
/// pretrained-encoder pathway; rows arrive from files).
struct TokenEmbeddingTable {
  std::unordered_map<std::string, std::vector<std::vector<double>>> rows;
  std::size_t dim = 0;
};

/// One direction's gate parameters, stacked (i, f, g, o):
/// w_input (4h, d_in), w_hidden (4h, h), bias (4h).
struct LstmParams {
  Tensor w_input;
  Tensor w_hidden;
  Tensor bias;
  std::size_t hidden = 0;

  static LstmParams init(std::size_t input_dim, std::size_t hidden,
                         std::mt19937_64& rng);
  static LstmParams zeros(std::size_t input_dim, std::size_t hidden);
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t output_dim() const { return forward.hidden + backward.hidden; }
  static BiLstmParams init(std::size_t input_dim, std::size_t hidden_per_dir,
                           std::mt19937_64& rng);
  static BiLstmParams zeros(std::size_t input_dim, std::size_t hidden_per_dir);
};

/// File format: `token v1 v2 ... vd`, one token per line.
WordVectorTable load_word_vectors(const std::string& path);

/// File format: `sample_id<TAB>row_index<TAB>v1 v2 ... vd`; row indices must
/// be dense from 0 per sample.
TokenEmbeddingTable load_token_embeddings(const std::string& path);

/// Row i = table[tokens[i]]; out-of-vocabulary tokens get a zero row.
Tensor lookup(const std::vector<std::string>& tokens, const WordVectorTable& table);

/// Row-wise concatenation of two (n, d1) and (n, d2) matrices.
Tensor concat_external(const Tensor& h, const Tensor& ext);

/// Runs one LSTM direction over the rows of x; returns all hidden states
/// (n, hidden).
Tensor run_lstm(const Tensor& x, const LstmParams& params);

/// Bidirectional encoder: output row t = [forward h_t | backward h_t],
/// so the output dimension is 2 * hidden per direction.
Tensor bilstm_encode(const Tensor& h, const BiLstmParams& params);

}  // namespace adgnn::embed
