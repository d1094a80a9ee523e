#pragma once

#include <string>
#include <vector>

#include "adgnn/ingest.hpp"
#include "adgnn/tensor.hpp"

namespace adgnn::graph {

/// Token graph: (n, n) weighted adjacency (0 = no edge) plus optional node
/// features with one row per node. Dependency graphs are directed
/// head->dependent and carry no self-loops; dynamic graphs keep the diagonal
/// the similarity threshold admits.
struct TextGraph {
  std::size_t n = 0;
  Tensor adjacency;       // (n, n)
  bool directed = false;
  Tensor node_features;   // (n, d) or undefined

  void set_features(const Tensor& features);
};

/// Trainable weight vector for the weighted-cosine similarity plus the
/// sparsification threshold.
struct GraphLearnerParams {
  Tensor weight;   // (d), trainable
  double epsilon = 0.95;

  static GraphLearnerParams init(std::size_t dim, double epsilon,
                                 std::mt19937_64& rng);
};

enum class DependencyTerm { normalized_adjacency, normalized_laplacian };

struct FusionConfig {
  double lambda = 0.5;  // in [0, 1]
  DependencyTerm dependency_term = DependencyTerm::normalized_adjacency;
  bool row_normalize_dynamic = true;
};

/// Head->dependent edges per sentence plus one chaining edge from the last
/// token of each sentence to the ROOT token of the next, so the undirected
/// view of any parse forest is connected.
TextGraph build_dependency_graph(const ingest::Transcript& transcript,
                                 const std::vector<ingest::DependencyParse>& parses,
                                 const Tensor& node_features = {});

/// S_ij = cos(w ⊙ h_i, w ⊙ h_j); entries strictly above epsilon are kept as
/// edge weights, the rest are zeroed with a hard (zero-gradient) gate.
TextGraph learn_dynamic_graph(const Tensor& h0, const GraphLearnerParams& params);

/// Scales rows with positive sum to sum 1; zero rows stay zero. Negative
/// entries are an error.
Tensor row_normalize(const Tensor& a);

/// Symmetrizes the dependency adjacency (max(A, A^T)), adds self-loops, and
/// returns D^-1/2 A D^-1/2 or I minus it depending on mode.
Tensor normalized_dependency_term(const TextGraph& dep, DependencyTerm mode);

/// A_com = lambda * dep_term + (1 - lambda) * f(A_dyn), differentiable
/// through the dynamic branch.
TextGraph fuse_graphs(const Tensor& dep_term, const TextGraph& dyn,
                      const FusionConfig& cfg);

/// Debug dump: {"n": n, "edges": [[i, j, w], ...]} with edges in row-major
/// order.
std::string graph_to_json(const TextGraph& g);

/// True when the undirected view of the adjacency is a single component.
bool undirected_connected(const TextGraph& g);

}  // namespace adgnn::graph
