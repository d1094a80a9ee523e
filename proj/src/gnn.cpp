#include "adgnn/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "adgnn/rng.hpp"

namespace adgnn::gnn {

namespace {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

/// GraphSAGE view of the adjacency: dependency graphs (directed, constant)
/// are symmetrized with max(A, A^T); learned graphs are used as stored.
Tensor sage_view(const graph::TextGraph& g) {
  if (!g.directed) return g.adjacency;
  std::size_t n = g.n;
  const auto& a = g.adjacency.values();
  std::vector<double> sym(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym[i * n + j] = std::max(a[i * n + j], a[j * n + i]);
  return Tensor::matrix(n, n, std::move(sym));
}

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::relu ? relu(x) : sigmoid(x);
}

std::vector<std::size_t> row_neighbors(const Tensor& adjacency, std::size_t v) {
  std::size_t n = adjacency.rows();
  const auto& a = adjacency.values();
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n; ++j)
    if (a[v * n + j] != 0.0) out.push_back(j);
  return out;
}

}  // namespace

SageLayerParams SageLayerParams::init(std::size_t d_in, std::size_t d_out,
                                      Aggregator agg, std::mt19937_64& rng) {
  SageLayerParams p;
  double b = xavier_bound(2 * d_in, d_out);
  p.weight = Tensor::uniform({d_out, 2 * d_in}, -b, b, rng, true);
  if (agg == Aggregator::lstm) {
    p.aggregator = embed::LstmParams::init(d_in, d_in, rng);
    p.has_lstm = true;
  }
  return p;
}

GgnnLayerParams GgnnLayerParams::init(std::size_t d, std::mt19937_64& rng) {
  GgnnLayerParams p;
  double b = xavier_bound(d, d);
  auto mat = [&]() { return Tensor::uniform({d, d}, -b, b, rng, true); };
  p.w_in = mat();
  p.w_out = mat();
  p.bias = Tensor::zeros({d}, true);
  p.w_reset = mat();
  p.u_reset = mat();
  p.w_update = mat();
  p.u_update = mat();
  p.w_cand = mat();
  p.u_cand = mat();
  return p;
}

GgnnLayerParams GgnnLayerParams::zeros(std::size_t d) {
  GgnnLayerParams p;
  auto mat = [&]() { return Tensor::zeros({d, d}, true); };
  p.w_in = mat();
  p.w_out = mat();
  p.bias = Tensor::zeros({d}, true);
  p.w_reset = mat();
  p.u_reset = mat();
  p.w_update = mat();
  p.u_update = mat();
  p.w_cand = mat();
  p.u_cand = mat();
  return p;
}

std::vector<std::size_t> sample_neighbors(const graph::TextGraph& g, std::size_t v,
                                          std::size_t n_s, std::mt19937_64& rng) {
  if (v >= g.n) throw_error(ErrorKind::ShapeMismatch, "node index out of range");
  Tensor view = sage_view(g);
  std::vector<std::size_t> neighbors = row_neighbors(view, v);
  if (neighbors.size() <= n_s) return neighbors;
  std::vector<std::size_t> picks = rng_sample_without_replacement(rng, neighbors.size(), n_s);
  std::vector<std::size_t> out;
  out.reserve(n_s);
  for (std::size_t p : picks) out.push_back(neighbors[p]);
  std::sort(out.begin(), out.end());
  return out;
}

Tensor sage_layer(const graph::TextGraph& g, const Tensor& h,
                  const SageLayerParams& params, const SageConfig& cfg,
                  std::mt19937_64& rng) {
  if (h.rank() != 2 || h.rows() != g.n) {
    throw_error(ErrorKind::ShapeMismatch, "feature rows must match node count");
  }
  std::size_t n = g.n, d = h.cols();
  if (params.weight.cols() != 2 * d) {
    throw_error(ErrorKind::ShapeMismatch, "sage weight expects concat(h_v, h_N)");
  }
  Tensor view = sage_view(g);

  // sampled neighborhoods, then a 0/1 mask so aggregation stays matrix-shaped
  std::vector<std::vector<std::size_t>> sampled(n);
  std::vector<double> mask(n * n, 0.0);
  {
    const auto& a = view.values();
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<std::size_t> nbrs;
      for (std::size_t j = 0; j < n; ++j)
        if (a[v * n + j] != 0.0) nbrs.push_back(j);
      if (nbrs.size() > cfg.sample_size) {
        auto picks = rng_sample_without_replacement(rng, nbrs.size(), cfg.sample_size);
        std::vector<std::size_t> chosen;
        chosen.reserve(picks.size());
        for (std::size_t p : picks) chosen.push_back(nbrs[p]);
        std::sort(chosen.begin(), chosen.end());
        nbrs = std::move(chosen);
      }
      for (std::size_t j : nbrs) mask[v * n + j] = 1.0;
      sampled[v] = std::move(nbrs);
    }
  }

  Tensor aggregated;
  if (cfg.aggregator == Aggregator::mean) {
    Tensor kept = hadamard(view, Tensor::matrix(n, n, std::move(mask)));
    aggregated = rowwise_div(matmul(kept, h), sum(kept, 1));
  } else {
    if (!params.has_lstm) {
      throw_error(ErrorKind::ShapeMismatch, "lstm aggregator without lstm params");
    }
    std::vector<Tensor> rows;
    rows.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<std::size_t> order = sampled[v];
      rng_shuffle(rng, order);
      if (order.empty()) {
        rows.push_back(Tensor::zeros({d}));
        continue;
      }
      std::vector<Tensor> seq;
      seq.reserve(order.size());
      for (std::size_t u : order) {
        Tensor weight = reshape(
            slice(slice(view, 0, v, 1), 1, u, 1), {1});
        seq.push_back(scale_by(reshape(slice(h, 0, u, 1), {d}), weight));
      }
      Tensor states = embed::run_lstm(stack_rows(seq), params.aggregator);
      rows.push_back(reshape(slice(states, 0, order.size() - 1, 1), {d}));
    }
    aggregated = stack_rows(rows);
  }

  Tensor combined = concat(h, aggregated, 1);  // (n, 2d)
  return activate(matmul(combined, transpose(params.weight)), cfg.activation);
}

Tensor ggnn_layer(const graph::TextGraph& g, const Tensor& h,
                  const GgnnLayerParams& params) {
  if (h.rank() != 2 || h.rows() != g.n) {
    throw_error(ErrorKind::ShapeMismatch, "feature rows must match node count");
  }
  std::size_t d = h.cols();
  if (params.w_in.rows() != d || params.w_in.cols() != d) {
    throw_error(ErrorKind::ShapeMismatch, "ggnn needs square (d, d) transforms");
  }
  const Tensor& a = g.adjacency;
  // row v of incoming = sum_u A_uv h_u, of outgoing = sum_u A_vu h_u
  Tensor incoming = matmul(transpose(a), h);
  Tensor outgoing = matmul(a, h);
  Tensor messages = add(add(matmul(incoming, transpose(params.w_in)),
                            matmul(outgoing, transpose(params.w_out))),
                        params.bias);
  Tensor reset = sigmoid(add(matmul(messages, transpose(params.w_reset)),
                             matmul(h, transpose(params.u_reset))));
  Tensor candidate = tanh(add(matmul(messages, transpose(params.w_cand)),
                              matmul(hadamard(reset, h), transpose(params.u_cand))));
  Tensor update = sigmoid(add(matmul(messages, transpose(params.w_update)),
                              matmul(h, transpose(params.u_update))));
  Tensor keep = sub(Tensor::full({g.n, d}, 1.0), update);
  return add(hadamard(keep, h), hadamard(update, candidate));
}

Tensor run_gnn(const graph::TextGraph& g, const Tensor& h0, const GnnStack& stack,
               std::mt19937_64& rng) {
  if (stack.kind == GnnKind::none) return h0;
  Tensor h = h0;
  if (stack.kind == GnnKind::sage) {
    if (stack.sage_layers.empty() || stack.sage_layers.size() != stack.sage_cfg.layers) {
      throw_error(ErrorKind::InvalidConfig,
                  "sage stack needs K >= 1 layer parameter sets matching the config");
    }
    for (const auto& layer : stack.sage_layers) {
      h = sage_layer(g, h, layer, stack.sage_cfg, rng);
    }
  } else {
    if (stack.ggnn_layers.empty()) {
      throw_error(ErrorKind::InvalidConfig, "ggnn stack needs K >= 1 layers");
    }
    for (const auto& layer : stack.ggnn_layers) {
      h = ggnn_layer(g, h, layer);
    }
  }
  return h;
}

}  // namespace adgnn::gnn
