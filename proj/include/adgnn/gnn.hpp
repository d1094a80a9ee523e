#pragma once

#include <random>
#include <vector>

#include "adgnn/embed.hpp"
#include "adgnn/graph.hpp"
#include "adgnn/tensor.hpp"

namespace adgnn::gnn {

enum class Aggregator { mean, lstm };
enum class Activation { relu, sigmoid };

struct SageConfig {
  std::size_t layers = 1;        // K >= 1
  std::size_t sample_size = 10;  // n_s >= 1
  Aggregator aggregator = Aggregator::mean;
  Activation activation = Activation::relu;
};

struct SageLayerParams {
  Tensor weight;                  // (d_out, d_in + d_agg)
  embed::LstmParams aggregator;   // used by the lstm aggregator only
  bool has_lstm = false;

  static SageLayerParams init(std::size_t d_in, std::size_t d_out,
                              Aggregator agg, std::mt19937_64& rng);
};

struct GgnnLayerParams {
  Tensor w_in, w_out;       // (d, d) directed message transforms
  Tensor bias;              // (d)
  Tensor w_reset, u_reset;  // (d, d)
  Tensor w_update, u_update;
  Tensor w_cand, u_cand;

  static GgnnLayerParams init(std::size_t d, std::mt19937_64& rng);
  static GgnnLayerParams zeros(std::size_t d);
};

enum class GnnKind { sage, ggnn, none };

struct GnnStack {
  GnnKind kind = GnnKind::none;
  SageConfig sage_cfg;
  std::vector<SageLayerParams> sage_layers;
  std::vector<GgnnLayerParams> ggnn_layers;
};

/// Neighbors of v under the layer's view of the graph (nonzero entries of
/// row v, the diagonal included when present): all of them when deg <= n_s,
/// otherwise a seeded uniform subset without replacement.
std::vector<std::size_t> sample_neighbors(const graph::TextGraph& g, std::size_t v,
                                          std::size_t n_s, std::mt19937_64& rng);

/// One GraphSAGE step: aggregate sampled neighbors (mean weights by edge
/// weight; lstm consumes a seeded random permutation of weight-scaled
/// inputs), concat with the node's own feature, project, activate. An empty
/// neighborhood aggregates to zero.
Tensor sage_layer(const graph::TextGraph& g, const Tensor& h,
                  const SageLayerParams& params, const SageConfig& cfg,
                  std::mt19937_64& rng);

/// One gated step: directed weighted messages through w_in/w_out plus bias,
/// then reset/update gates and a tanh candidate combine with the previous
/// state.
Tensor ggnn_layer(const graph::TextGraph& g, const Tensor& h,
                  const GgnnLayerParams& params);

/// Applies the stack's K layers in order; kind == none bypasses message
/// passing and returns h0 unchanged.
Tensor run_gnn(const graph::TextGraph& g, const Tensor& h0, const GnnStack& stack,
               std::mt19937_64& rng);

}  // namespace adgnn::gnn
