#include "adgnn/graph.hpp"

#include <cmath>
#include <random>

#include "adgnn/augment.hpp"
#include "adgnn/rng.hpp"
#include "doctest.h"

using namespace adgnn;
using ingest::DependencyParse;
using ingest::Transcript;

namespace {

Transcript make_transcript(const std::vector<std::size_t>& sentence_lengths) {
  Transcript t;
  std::size_t cursor = 0;
  for (std::size_t len : sentence_lengths) {
    for (std::size_t i = 0; i < len; ++i)
      t.tokens.push_back("w" + std::to_string(cursor + i));
    t.sentence_bounds.emplace_back(cursor, cursor + len);
    cursor += len;
  }
  return t;
}

/// Random tree over `len` tokens: token i's head drawn among earlier tokens.
DependencyParse random_parse(std::size_t len, std::mt19937_64& rng) {
  DependencyParse p;
  for (std::size_t i = 0; i < len; ++i) {
    p.head.push_back(i == 0 ? -1 : static_cast<int>(rng_index(rng, i)));
    p.relation.push_back(i == 0 ? "root" : "dep");
  }
  return p;
}

std::size_t count_edges(const graph::TextGraph& g) {
  std::size_t edges = 0;
  for (double v : g.adjacency.values())
    if (v != 0.0) ++edges;
  return edges;
}

}  // namespace

TEST_CASE("single-sentence dependency graph has k-1 edges") {
  Transcript t = make_transcript({5});
  DependencyParse p;
  p.head = {-1, 0, 0, 2, 2};
  p.relation = {"root", "a", "b", "c", "d"};
  graph::TextGraph g = graph::build_dependency_graph(t, {p});
  CHECK(g.n == 5);
  CHECK(count_edges(g) == 4);
  CHECK(g.directed);
  CHECK(g.adjacency.at(0, 1) == 1.0);  // head -> dependent
  CHECK(g.adjacency.at(2, 4) == 1.0);
}

TEST_CASE("two-sentence graph gains one chaining edge") {
  Transcript t = make_transcript({3, 4});
  DependencyParse p1;
  p1.head = {-1, 0, 1};
  p1.relation = {"root", "x", "y"};
  DependencyParse p2;
  p2.head = {1, -1, 1, 2};
  p2.relation = {"a", "root", "b", "c"};
  graph::TextGraph g = graph::build_dependency_graph(t, {p1, p2});
  CHECK(count_edges(g) == (3 - 1) + (4 - 1) + 1);
  // chain runs from the last token of sentence 0 to sentence 1's root
  CHECK(g.adjacency.at(2, 3 + 1) == 1.0);
}

TEST_CASE("dependency graphs over random parse forests are connected") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::size_t> lengths;
    std::size_t sentences = 1 + rng_index(rng, 4);
    for (std::size_t s = 0; s < sentences; ++s) lengths.push_back(1 + rng_index(rng, 6));
    Transcript t = make_transcript(lengths);
    std::vector<DependencyParse> parses;
    for (std::size_t len : lengths) parses.push_back(random_parse(len, rng));
    graph::TextGraph g = graph::build_dependency_graph(t, parses);
    std::size_t expected = 0;
    for (std::size_t len : lengths) expected += len - 1;
    expected += lengths.size() - 1;
    CHECK(count_edges(g) == expected);
    CHECK(graph::undirected_connected(g));
  }
}

TEST_CASE("misaligned parses are rejected") {
  Transcript t = make_transcript({3});
  DependencyParse p;
  p.head = {-1, 0};
  p.relation = {"root", "dep"};
  try {
    graph::build_dependency_graph(t, {p});
    FAIL("expected AlignmentMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AlignmentMismatch);
  }
}

TEST_CASE("identical rows stay connected at epsilon 0.95") {
  Tensor h = Tensor::matrix(2, 3, {1, 2, 3, 1, 2, 3});
  graph::GraphLearnerParams params;
  params.weight = Tensor::vector({0.5, 1.0, 2.0});
  params.epsilon = 0.95;
  graph::TextGraph g = graph::learn_dynamic_graph(h, params);
  CHECK(g.adjacency.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.adjacency.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal rows drop at epsilon 0.95") {
  Tensor h = Tensor::matrix(2, 2, {1, 0, 0, 1});
  graph::GraphLearnerParams params;
  params.weight = Tensor::vector({1, 1});
  params.epsilon = 0.95;
  graph::TextGraph g = graph::learn_dynamic_graph(h, params);
  CHECK(g.adjacency.at(0, 1) == 0.0);
  CHECK(g.adjacency.at(1, 0) == 0.0);
}

TEST_CASE("dynamic graph matches a brute-force similarity recomputation") {
  std::mt19937_64 rng(47);
  Tensor h = Tensor::uniform({6, 4}, -1, 1, rng);
  Tensor w = Tensor::uniform({4}, 0.5, 1.5, rng);
  graph::GraphLearnerParams params;
  params.weight = w;
  params.epsilon = 0.3;
  graph::TextGraph g = graph::learn_dynamic_graph(h, params);

  // independent oracle: plain double loops over the definition
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t c = 0; c < 4; ++c) {
        double a = w.at(c) * h.at(i, c);
        double b = w.at(c) * h.at(j, c);
        dot += a * b;
        ni += a * a;
        nj += b * b;
      }
      double sim = dot / (std::sqrt(ni) * std::sqrt(nj));
      double expected = sim > params.epsilon ? sim : 0.0;
      CHECK(g.adjacency.at(i, j) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("dynamic similarity is symmetric with unit diagonal") {
  std::mt19937_64 rng(53);
  Tensor h = Tensor::uniform({7, 5}, -1, 1, rng);
  graph::GraphLearnerParams params;
  params.weight = Tensor::uniform({5}, 0.5, 1.5, rng);
  params.epsilon = -1.0;  // keep everything: inspect raw similarities
  graph::TextGraph g = graph::learn_dynamic_graph(h, params);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(std::abs(g.adjacency.at(i, i) - 1.0) < 1e-12);
    for (std::size_t j = 0; j < 7; ++j)
      CHECK(std::abs(g.adjacency.at(i, j) - g.adjacency.at(j, i)) < 1e-12);
  }
}

TEST_CASE("zero-norm weighted rows are an error") {
  Tensor h = Tensor::matrix(2, 2, {1, 1, 0, 0});
  graph::GraphLearnerParams params;
  params.weight = Tensor::vector({1, 1});
  try {
    graph::learn_dynamic_graph(h, params);
    FAIL("expected ZeroNormRow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroNormRow);
  }
}

TEST_CASE("retained similarities carry gradients, dropped pairs none") {
  Tensor h = Tensor::matrix(3, 2, {1.0, 0.1, 1.0, 0.2, -1.0, 0.9});
  double err = grad_check(
      [&](const Tensor& w) {
        graph::GraphLearnerParams params;
        params.weight = w;
        params.epsilon = 0.8;  // keeps the near-parallel pair only
        return sum(graph::learn_dynamic_graph(h, params).adjacency);
      },
      Tensor::vector({1.0, 1.2}), 1e-6);
  CHECK(err < 1e-4);

  // a dropped pair contributes exactly zero gradient
  Tensor w = Tensor::vector({1.0, 1.2}, true);
  Tape tape;
  Tensor picked;
  {
    TapeScope scope(tape);
    graph::GraphLearnerParams params;
    params.weight = w;
    params.epsilon = 0.8;
    graph::TextGraph g = graph::learn_dynamic_graph(h, params);
    REQUIRE(g.adjacency.at(0, 2) == 0.0);
    picked = sum(slice(slice(g.adjacency, 0, 0, 1), 1, 2, 1));
  }
  tape.backward(picked);
  for (double g : w.grad()) CHECK(g == 0.0);
}

TEST_CASE("row_normalize scales positive rows and keeps zero rows") {
  Tensor a = Tensor::matrix(2, 2, {1, 1, 0, 2});
  Tensor out = graph::row_normalize(a);
  CHECK(out.at(0, 0) == doctest::Approx(0.5));
  CHECK(out.at(0, 1) == doctest::Approx(0.5));
  CHECK(out.at(1, 0) == 0.0);
  CHECK(out.at(1, 1) == doctest::Approx(1.0));

  Tensor zero = Tensor::zeros({3, 3});
  CHECK(graph::row_normalize(zero).values() == zero.values());

  try {
    graph::row_normalize(Tensor::matrix(1, 2, {-1, 2}));
    FAIL("expected NegativeEntry");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeEntry);
  }
}

TEST_CASE("normalized dependency term on a two-node edge") {
  Transcript t = make_transcript({2});
  DependencyParse p;
  p.head = {-1, 0};
  p.relation = {"root", "dep"};
  graph::TextGraph dep = graph::build_dependency_graph(t, {p});

  Tensor adj = graph::normalized_dependency_term(dep, graph::DependencyTerm::normalized_adjacency);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(adj.at(i, j) == doctest::Approx(0.5).epsilon(1e-12));

  Tensor lap = graph::normalized_dependency_term(dep, graph::DependencyTerm::normalized_laplacian);
  CHECK(lap.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lap.at(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("normalized dependency term is symmetric in both modes") {
  std::mt19937_64 rng(59);
  Transcript t = make_transcript({4, 3});
  std::vector<DependencyParse> parses = {random_parse(4, rng), random_parse(3, rng)};
  graph::TextGraph dep = graph::build_dependency_graph(t, parses);
  for (auto mode : {graph::DependencyTerm::normalized_adjacency,
                    graph::DependencyTerm::normalized_laplacian}) {
    Tensor m = graph::normalized_dependency_term(dep, mode);
    for (std::size_t i = 0; i < dep.n; ++i)
      for (std::size_t j = 0; j < dep.n; ++j)
        CHECK(m.at(i, j) == doctest::Approx(m.at(j, i)).epsilon(1e-12));
  }
}

namespace {

graph::TextGraph small_dynamic_graph() {
  Tensor h = Tensor::matrix(3, 2, {1.0, 0.1, 0.9, 0.2, 0.2, 1.0});
  graph::GraphLearnerParams params;
  params.weight = Tensor::vector({1.0, 1.0});
  params.epsilon = -1.0;
  return graph::learn_dynamic_graph(h, params);
}

}  // namespace

TEST_CASE("fusion endpoints reproduce each branch") {
  graph::TextGraph dyn = small_dynamic_graph();
  Tensor dep_term = Tensor::matrix(3, 3, {0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5});

  graph::FusionConfig cfg;
  cfg.lambda = 1.0;
  Tensor only_dep = graph::fuse_graphs(dep_term, dyn, cfg).adjacency;
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(only_dep.values()[i] == doctest::Approx(dep_term.values()[i]).epsilon(1e-15));

  cfg.lambda = 0.0;
  Tensor only_dyn = graph::fuse_graphs(dep_term, dyn, cfg).adjacency;
  Tensor expected = graph::row_normalize(dyn.adjacency);
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(only_dyn.values()[i] == doctest::Approx(expected.values()[i]).epsilon(1e-15));
}

TEST_CASE("fusion at lambda 0.5 is the elementwise average") {
  graph::TextGraph dyn = small_dynamic_graph();
  Tensor dep_term = Tensor::matrix(3, 3, {0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.3, 0.3, 0.4});
  graph::FusionConfig cfg;
  cfg.lambda = 0.5;
  Tensor fused = graph::fuse_graphs(dep_term, dyn, cfg).adjacency;
  Tensor rn = graph::row_normalize(dyn.adjacency);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double by_hand = 0.5 * dep_term.at(i, j) + 0.5 * rn.at(i, j);
      CHECK(fused.at(i, j) == doctest::Approx(by_hand).epsilon(1e-12));
    }
}

TEST_CASE("fusion is linear in both matrix arguments at fixed lambda") {
  std::mt19937_64 rng(61);
  graph::TextGraph dyn = small_dynamic_graph();
  graph::FusionConfig cfg;
  cfg.lambda = 0.3;
  cfg.row_normalize_dynamic = false;  // raw branch keeps linearity visible
  Tensor d1 = Tensor::uniform({3, 3}, 0, 1, rng);
  Tensor d2 = Tensor::uniform({3, 3}, 0, 1, rng);
  Tensor sum_fused = graph::fuse_graphs(add(d1, d2), dyn, cfg).adjacency;
  Tensor f1 = graph::fuse_graphs(d1, dyn, cfg).adjacency;
  Tensor f2 = graph::fuse_graphs(d2, dyn, cfg).adjacency;
  Tensor dyn_only = scale(dyn.adjacency, 1.0 - cfg.lambda);
  for (std::size_t i = 0; i < 9; ++i) {
    double lhs = sum_fused.values()[i];
    double rhs = f1.values()[i] + f2.values()[i] - dyn_only.values()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("size mismatches in fusion are rejected") {
  graph::TextGraph dyn = small_dynamic_graph();
  graph::FusionConfig cfg;
  try {
    graph::fuse_graphs(Tensor::zeros({2, 2}), dyn, cfg);
    FAIL("expected SizeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SizeMismatch);
  }
}

TEST_CASE("graph debug dump lists n and weighted triplets") {
  Transcript t = make_transcript({2});
  DependencyParse p;
  p.head = {-1, 0};
  p.relation = {"root", "dep"};
  graph::TextGraph g = graph::build_dependency_graph(t, {p});
  CHECK(graph::graph_to_json(g) == R"({"edges":[[0,1,1.0]],"n":2})");
}

TEST_CASE("chain parses produce connected left-headed trees") {
  Transcript t = make_transcript({3, 2});
  auto parses = augment::chain_parses(t);
  REQUIRE(parses.size() == 2);
  CHECK(parses[0].head == std::vector<int>{-1, 0, 1});
  CHECK(parses[1].head == std::vector<int>{-1, 0});
  graph::TextGraph g = graph::build_dependency_graph(t, parses);
  CHECK(graph::undirected_connected(g));
}
