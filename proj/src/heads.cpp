#include "adgnn/heads.hpp"

#include <cmath>

namespace adgnn::heads {

namespace {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

MlpParams MlpParams::init(std::size_t d_in, std::size_t hidden, std::mt19937_64& rng) {
  MlpParams p;
  double b1 = xavier_bound(d_in, hidden);
  double b2 = xavier_bound(hidden, 2);
  p.w1 = Tensor::uniform({hidden, d_in}, -b1, b1, rng, true);
  p.b1 = Tensor::zeros({hidden}, true);
  p.w2 = Tensor::uniform({2, hidden}, -b2, b2, rng, true);
  p.b2 = Tensor::zeros({2}, true);
  return p;
}

CrossNetParams CrossNetParams::init(std::size_t dim, std::size_t depth,
                                    std::mt19937_64& rng) {
  CrossNetParams p;
  double b = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t l = 0; l < depth; ++l) {
    p.weights.push_back(Tensor::uniform({dim}, -b, b, rng, true));
    p.biases.push_back(Tensor::zeros({dim}, true));
  }
  return p;
}

CrossNetParams CrossNetParams::zeros(std::size_t dim, std::size_t depth) {
  CrossNetParams p;
  for (std::size_t l = 0; l < depth; ++l) {
    p.weights.push_back(Tensor::zeros({dim}, true));
    p.biases.push_back(Tensor::zeros({dim}, true));
  }
  return p;
}

ProjectionParams ProjectionParams::init(std::size_t d_text, std::size_t d_audio,
                                        std::size_t d_common, std::mt19937_64& rng) {
  ProjectionParams p;
  double bt = xavier_bound(d_text, d_common);
  double ba = xavier_bound(d_audio, d_common);
  p.text = Tensor::uniform({d_common, d_text}, -bt, bt, rng, true);
  p.audio = Tensor::uniform({d_common, d_audio}, -ba, ba, rng, true);
  return p;
}

Tensor mean_pool(const Tensor& h) {
  if (h.rank() != 2 || h.rows() == 0) {
    throw_error(ErrorKind::EmptyGraph, "mean_pool needs at least one node");
  }
  return mean(h, 0);
}

Tensor mlp_classify(const Tensor& r, const MlpParams& params) {
  if (r.rank() != 1 || r.size() != params.w1.cols()) {
    throw_error(ErrorKind::ShapeMismatch, "mlp input dim mismatch");
  }
  Tensor hidden = relu(add(matmul(params.w1, r), params.b1));
  return add(matmul(params.w2, hidden), params.b2);
}

Tensor mlp_classify_rows(const Tensor& rows, const MlpParams& params) {
  if (rows.rank() != 2 || rows.cols() != params.w1.cols()) {
    throw_error(ErrorKind::ShapeMismatch, "mlp input dim mismatch");
  }
  Tensor hidden = relu(add(matmul(rows, transpose(params.w1)), params.b1));
  return add(matmul(hidden, transpose(params.w2)), params.b2);
}

std::pair<Tensor, Tensor> project_pair(const Tensor& text_feat,
                                       const Tensor& audio_feat,
                                       const ProjectionParams& params) {
  if (text_feat.rank() != 1 || text_feat.size() != params.text.cols() ||
      audio_feat.rank() != 1 || audio_feat.size() != params.audio.cols()) {
    throw_error(ErrorKind::ShapeMismatch, "projection input dim mismatch");
  }
  return {matmul(params.text, text_feat), matmul(params.audio, audio_feat)};
}

Tensor fuse_concat(const Tensor& text_feat, const Tensor& audio_feat) {
  if (audio_feat.size() == 0) return text_feat;
  if (text_feat.size() == 0) return audio_feat;
  return concat(text_feat, audio_feat, 0);
}

Tensor cross_network(const Tensor& x0, const CrossNetParams& params) {
  if (x0.rank() != 1) throw_error(ErrorKind::ShapeMismatch, "cross_network needs a vector");
  Tensor x = x0;
  for (std::size_t l = 0; l < params.depth(); ++l) {
    if (params.weights[l].size() != x0.size() || params.biases[l].size() != x0.size()) {
      throw_error(ErrorKind::ShapeMismatch, "cross layer dim mismatch");
    }
    Tensor crossing = sum(hadamard(x, params.weights[l]));  // x_l . w_l
    x = add(add(scale_by(x0, crossing), params.biases[l]), x);
  }
  return x;
}

}  // namespace adgnn::heads
