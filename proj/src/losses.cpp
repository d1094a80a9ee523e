#include "adgnn/losses.hpp"

#include <cmath>

namespace adgnn::losses {

Tensor cross_entropy(const Tensor& logits, int label) {
  if (logits.rank() != 1 || logits.size() != 2) {
    throw_error(ErrorKind::ShapeMismatch, "classification logits must have dim 2");
  }
  if (label != 0 && label != 1) {
    throw_error(ErrorKind::BadLabel, "label must be 0 or 1, got " + std::to_string(label));
  }
  Tensor log_probs = log_softmax(logits, 0);
  return neg(slice(log_probs, 0, static_cast<std::size_t>(label), 1));
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2 || logits.cols() != 2 || logits.rows() != labels.size()) {
    throw_error(ErrorKind::ShapeMismatch, "logits rows must match label count");
  }
  std::size_t b = logits.rows();
  std::vector<double> pick(b * 2, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw_error(ErrorKind::BadLabel, "label must be 0 or 1");
    }
    pick[i * 2 + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  Tensor mask = Tensor::matrix(b, 2, std::move(pick));
  Tensor picked = sum(hadamard(log_softmax(logits, 1), mask));
  return scale(picked, -1.0 / static_cast<double>(b));
}

Tensor graph_regularization(const Tensor& h0, const Tensor& adjacency,
                            const RegWeights& weights) {
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
    throw_error(ErrorKind::InvalidConfig, "regularization weights must be nonnegative");
  }
  if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols() ||
      h0.rank() != 2 || h0.rows() != adjacency.rows()) {
    throw_error(ErrorKind::ShapeMismatch, "adjacency must be (n, n) with H (n, d)");
  }
  for (double v : adjacency.values()) {
    if (v < 0.0) throw_error(ErrorKind::NegativeAdjacency, "regularizer input");
  }
  double n = static_cast<double>(adjacency.rows());

  Tensor degrees = sum(adjacency, 1);  // A1
  // tr(H^T L H) = sum_i deg_i |h_i|^2 - sum_ij A_ij (H H^T)_ij
  Tensor row_sq = sum(hadamard(h0, h0), 1);
  Tensor gram = matmul(h0, transpose(h0));
  Tensor smooth_raw = sub(sum(hadamard(degrees, row_sq)),
                          sum(hadamard(adjacency, gram)));
  Tensor smoothness = scale(smooth_raw, weights.alpha / (n * n));

  Tensor connectivity =
      scale(sum(log(add_scalar(degrees, 1e-12))), -weights.beta / n);

  Tensor sparsity = scale(frobenius_norm_sq(adjacency), weights.gamma / (n * n));

  return add(add(smoothness, connectivity), sparsity);
}

Tensor total_loss(const Tensor& l_pred, const Tensor& l_graph, GraphKind kind) {
  if (l_pred.size() != 1) throw_error(ErrorKind::NonScalarLoss, "l_pred must be scalar");
  if (kind == GraphKind::dependency) return l_pred;
  if (l_graph.size() != 1) throw_error(ErrorKind::NonScalarLoss, "l_graph must be scalar");
  return add(l_pred, l_graph);
}

Tensor contrastive_loss(const ContrastiveBatch& batch) {
  const Tensor& origin = batch.origin_feats;
  const Tensor& tts = batch.tts_feats;
  if (origin.rank() != 2 || tts.rank() != 2 || origin.shape() != tts.shape() ||
      origin.rows() == 0) {
    throw_error(ErrorKind::ShapeMismatch,
                "contrastive batch needs equal non-empty (n, d) matrices");
  }
  std::size_t n = origin.rows();
  Tensor e_origin = l2_normalize(origin, 1);
  Tensor e_tts = l2_normalize(tts, 1);
  Tensor similarity =
      scale(matmul(e_origin, transpose(e_tts)), std::exp(batch.temperature));
  // both directions score the diagonal; trace collects the matched pairs
  Tensor origin_term = scale(trace(log_softmax(similarity, 1)),
                             -1.0 / static_cast<double>(n));
  Tensor tts_term = scale(trace(log_softmax(similarity, 0)),
                          -1.0 / static_cast<double>(n));
  return scale(add(origin_term, tts_term), 0.5);
}

Tensor multitask_loss(const Tensor& l_con, const Tensor& l_origin,
                      const Tensor& l_tts, const MultitaskWeights& weights) {
  if (l_con.size() != 1 || l_origin.size() != 1 || l_tts.size() != 1) {
    throw_error(ErrorKind::NonScalarLoss, "multitask terms must be scalars");
  }
  return add(add(scale(l_con, weights.w_con), scale(l_origin, weights.w_origin)),
             scale(l_tts, weights.w_tts));
}

}  // namespace adgnn::losses
