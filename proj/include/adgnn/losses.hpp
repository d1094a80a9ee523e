#pragma once

#include <vector>

#include "adgnn/tensor.hpp"

namespace adgnn::losses {

struct RegWeights {
  double alpha = 0.1;
  double beta = 0.1;
  double gamma = 0.3;
};

struct MultitaskWeights {
  double w_con = 1.0;
  double w_origin = 1.0;
  double w_tts = 1.0;
};

/// Matched origin/TTS feature rows (row i of each matrix is one pair) plus
/// the temperature; similarities are scaled by exp(temperature).
struct ContrastiveBatch {
  Tensor origin_feats;  // (n, d)
  Tensor tts_feats;     // (n, d)
  double temperature = 0.0;
};

enum class GraphKind { dependency, dynamic, fused };

/// -log softmax(logits)[label] with a stable log-sum-exp.
Tensor cross_entropy(const Tensor& logits, int label);

/// Row-wise cross entropy averaged over a batch: logits (b, 2), one label
/// per row.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels);

/// Smoothness + connectivity + sparsity penalty of a learned graph:
/// (alpha/n^2) tr(H^T L H) - (beta/n) 1^T log(A1 + 1e-12) + (gamma/n^2) |A|_F^2
/// with L the unnormalized Laplacian diag(A1) - A.
Tensor graph_regularization(const Tensor& h0, const Tensor& adjacency,
                            const RegWeights& weights);

/// Dependency graphs train on the classification loss alone; dynamic and
/// fused graphs add the regularizer.
Tensor total_loss(const Tensor& l_pred, const Tensor& l_graph, GraphKind kind);

/// Symmetric InfoNCE over the batch: L2-normalized rows, S = E_o E_t^T
/// exp(t), cross entropy against the diagonal averaged over both directions.
Tensor contrastive_loss(const ContrastiveBatch& batch);

Tensor multitask_loss(const Tensor& l_con, const Tensor& l_origin,
                      const Tensor& l_tts, const MultitaskWeights& weights);

}  // namespace adgnn::losses
