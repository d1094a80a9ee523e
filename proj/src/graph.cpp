#include "adgnn/graph.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "nlohmann/json.hpp"

namespace adgnn::graph {

void TextGraph::set_features(const Tensor& features) {
  if (features.defined() && (features.rank() != 2 || features.rows() != n)) {
    throw_error(ErrorKind::RowCountMismatch,
                "node features must have one row per node");
  }
  node_features = features;
}

GraphLearnerParams GraphLearnerParams::init(std::size_t dim, double epsilon,
                                            std::mt19937_64& rng) {
  if (epsilon < -1.0 || epsilon > 1.0) {
    throw_error(ErrorKind::InvalidConfig, "epsilon must lie in [-1, 1]");
  }
  GraphLearnerParams p;
  // init around 1 so the weighted cosine starts near the plain cosine
  p.weight = Tensor::uniform({dim}, 0.9, 1.1, rng, true);
  p.epsilon = epsilon;
  return p;
}

TextGraph build_dependency_graph(const ingest::Transcript& transcript,
                                 const std::vector<ingest::DependencyParse>& parses,
                                 const Tensor& node_features) {
  ingest::check_sentence_bounds(transcript);
  if (parses.size() != transcript.sentence_bounds.size()) {
    throw_error(ErrorKind::AlignmentMismatch,
                "parse count " + std::to_string(parses.size()) +
                    " vs sentence count " +
                    std::to_string(transcript.sentence_bounds.size()));
  }
  std::size_t n = transcript.tokens.size();
  std::vector<double> adj(n * n, 0.0);

  std::vector<std::size_t> roots(parses.size());
  for (std::size_t s = 0; s < parses.size(); ++s) {
    auto [start, end] = transcript.sentence_bounds[s];
    const auto& parse = parses[s];
    if (parse.size() != end - start) {
      throw_error(ErrorKind::AlignmentMismatch,
                  "sentence " + std::to_string(s) + " has " +
                      std::to_string(end - start) + " tokens but parse has " +
                      std::to_string(parse.size()));
    }
    roots[s] = start + parse.root();
    for (std::size_t i = 0; i < parse.size(); ++i) {
      if (parse.head[i] < 0) continue;
      std::size_t head = start + static_cast<std::size_t>(parse.head[i]);
      adj[head * n + (start + i)] = 1.0;
    }
  }
  // chain: last token of sentence s -> ROOT token of sentence s+1
  for (std::size_t s = 1; s < parses.size(); ++s) {
    std::size_t last_prev = transcript.sentence_bounds[s - 1].second - 1;
    adj[last_prev * n + roots[s]] = 1.0;
  }

  TextGraph g;
  g.n = n;
  g.adjacency = Tensor::matrix(n, n, std::move(adj));
  g.directed = true;
  g.set_features(node_features);
  return g;
}

TextGraph learn_dynamic_graph(const Tensor& h0, const GraphLearnerParams& params) {
  if (h0.rank() != 2 || !params.weight.defined() ||
      params.weight.shape() != std::vector<std::size_t>{h0.cols()}) {
    throw_error(ErrorKind::ShapeMismatch,
                "learner weight dim must match node feature dim");
  }
  Tensor weighted = hadamard(h0, params.weight);       // (n, d), rows w ⊙ h_i
  Tensor unit = l2_normalize(weighted, 1);             // ZeroNormRow on zero rows
  Tensor similarity = matmul(unit, transpose(unit));   // (n, n) cosine matrix
  TextGraph g;
  g.n = h0.rows();
  g.adjacency = epsilon_threshold(similarity, params.epsilon);
  g.directed = false;
  g.set_features(h0);
  return g;
}

Tensor row_normalize(const Tensor& a) {
  if (a.rank() != 2) throw_error(ErrorKind::ShapeMismatch, "row_normalize needs rank 2");
  for (double v : a.values()) {
    if (v < 0.0) throw_error(ErrorKind::NegativeEntry, "row_normalize input");
  }
  return rowwise_div(a, sum(a, 1));
}

Tensor normalized_dependency_term(const TextGraph& dep, DependencyTerm mode) {
  std::size_t n = dep.n;
  const auto& a = dep.adjacency.values();
  // symmetrize, then self-loops; every degree is then >= 1
  std::vector<double> sym(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sym[i * n + j] = std::max(a[i * n + j], a[j * n + i]);
    }
    sym[i * n + i] = std::max(sym[i * n + i], 1.0);
  }
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += sym[i * n + j];
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = inv_sqrt_deg[i] * sym[i * n + j] * inv_sqrt_deg[j];
  if (mode == DependencyTerm::normalized_laplacian) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[i * n + j] = (i == j ? 1.0 : 0.0) - out[i * n + j];
  }
  return Tensor::matrix(n, n, std::move(out));
}

TextGraph fuse_graphs(const Tensor& dep_term, const TextGraph& dyn,
                      const FusionConfig& cfg) {
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) {
    throw_error(ErrorKind::InvalidConfig, "lambda must lie in [0, 1]");
  }
  if (dep_term.rank() != 2 || dep_term.rows() != dyn.n || dep_term.cols() != dyn.n) {
    throw_error(ErrorKind::SizeMismatch,
                "dependency term and dynamic graph sizes differ");
  }
  Tensor dynamic_part =
      cfg.row_normalize_dynamic ? row_normalize(dyn.adjacency) : dyn.adjacency;
  Tensor fused = add(scale(dep_term, cfg.lambda), scale(dynamic_part, 1.0 - cfg.lambda));
  TextGraph g;
  g.n = dyn.n;
  g.adjacency = fused;
  g.directed = false;
  g.set_features(dyn.node_features);
  return g;
}

std::string graph_to_json(const TextGraph& g) {
  nlohmann::json doc;
  doc["n"] = g.n;
  nlohmann::json edges = nlohmann::json::array();
  const auto& a = g.adjacency.values();
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double w = a[i * g.n + j];
      if (w != 0.0) edges.push_back({i, j, w});
    }
  }
  doc["edges"] = std::move(edges);
  return doc.dump();
}

bool undirected_connected(const TextGraph& g) {
  std::size_t n = g.n;
  if (n == 0) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const auto& a = g.adjacency.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i * n + j] != 0.0) parent[find(i)] = find(j);
  std::size_t root = find(0);
  for (std::size_t i = 1; i < n; ++i)
    if (find(i) != root) return false;
  return true;
}

}  // namespace adgnn::graph
