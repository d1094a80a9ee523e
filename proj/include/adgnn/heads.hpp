#pragma once

#include <random>
#include <vector>

#include "adgnn/tensor.hpp"

namespace adgnn::heads {

/// One hidden ReLU layer then an affine map to 2 logits.
struct MlpParams {
  Tensor w1;  // (hidden, d_in)
  Tensor b1;  // (hidden)
  Tensor w2;  // (2, hidden)
  Tensor b2;  // (2)

  static MlpParams init(std::size_t d_in, std::size_t hidden, std::mt19937_64& rng);
};

/// Per-layer crossing parameters; every vector has the fused input dim.
struct CrossNetParams {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t depth() const { return weights.size(); }
  static CrossNetParams init(std::size_t dim, std::size_t depth, std::mt19937_64& rng);
  static CrossNetParams zeros(std::size_t dim, std::size_t depth);
};

/// Projections of the text and audio features to a common dimension.
struct ProjectionParams {
  Tensor text;   // (d_c, d_text)
  Tensor audio;  // (d_c, d_audio)

  static ProjectionParams init(std::size_t d_text, std::size_t d_audio,
                               std::size_t d_common, std::mt19937_64& rng);
};

/// r = (1/n) sum of rows. Empty input is an error.
Tensor mean_pool(const Tensor& h);

/// Affine + ReLU chain ending in 2 raw logits (the loss applies softmax).
Tensor mlp_classify(const Tensor& r, const MlpParams& params);

/// Row-wise variant for a batch of feature vectors: (b, d) -> (b, 2).
Tensor mlp_classify_rows(const Tensor& rows, const MlpParams& params);

std::pair<Tensor, Tensor> project_pair(const Tensor& text_feat,
                                       const Tensor& audio_feat,
                                       const ProjectionParams& params);

/// Concatenation in (text, audio) order.
Tensor fuse_concat(const Tensor& text_feat, const Tensor& audio_feat);

/// x_{l+1} = x0 * (x_l . w_l) + b_l + x_l, applied depth() times.
Tensor cross_network(const Tensor& x0, const CrossNetParams& params);

}  // namespace adgnn::heads
