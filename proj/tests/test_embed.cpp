#include "adgnn/embed.hpp"

#include <random>

#include "doctest.h"
#include "test_support.hpp"

using namespace adgnn;

TEST_CASE("load_word_vectors reads space-separated rows") {
  test_support::TempDir dir("wv");
  auto table = embed::load_word_vectors(dir.file("v.txt", "boy 1 2 3\ngirl 4 5 6\n"));
  CHECK(table.dim == 3);
  CHECK(table.vectors.size() == 2);
  CHECK(table.vectors.at("girl")[2] == 6.0);
}

TEST_CASE("load_word_vectors rejects duplicates and mixed dims") {
  test_support::TempDir dir("wv2");
  try {
    embed::load_word_vectors(dir.file("dup.txt", "a 1 2\na 3 4\n"));
    FAIL("expected DuplicateToken");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateToken);
  }
  try {
    embed::load_word_vectors(dir.file("dims.txt", "a 1 2\nb 1 2 3\n"));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("lookup returns stored rows and zero rows for OOV") {
  embed::WordVectorTable table;
  table.dim = 2;
  table.vectors["a"] = {1, 2};
  table.vectors["b"] = {3, 4};
  Tensor h = embed::lookup({"a", "zzz", "b"}, table);
  CHECK(h.rows() == 3);
  CHECK(h.at(0, 1) == 2.0);
  CHECK(h.at(1, 0) == 0.0);
  CHECK(h.at(1, 1) == 0.0);
  CHECK(h.at(2, 0) == 3.0);
}

TEST_CASE("lookup of an empty token list is a 0 x d matrix") {
  embed::WordVectorTable table;
  table.dim = 4;
  Tensor h = embed::lookup({}, table);
  CHECK(h.rows() == 0);
  CHECK(h.cols() == 4);
}

TEST_CASE("lookup is pure") {
  embed::WordVectorTable table;
  table.dim = 2;
  table.vectors["a"] = {1, 2};
  Tensor h1 = embed::lookup({"a", "a"}, table);
  Tensor h2 = embed::lookup({"a", "a"}, table);
  CHECK(h1.values() == h2.values());
}

TEST_CASE("concat_external joins rows and checks counts") {
  Tensor h = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor ext = Tensor::matrix(2, 2, {7, 8, 9, 10});
  Tensor joined = embed::concat_external(h, ext);
  CHECK(joined.cols() == 5);
  CHECK(joined.at(1, 3) == 9.0);

  try {
    embed::concat_external(h, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
    FAIL("expected RowCountMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RowCountMismatch);
  }

  Tensor zeros = Tensor::zeros({2, 2});
  Tensor padded = embed::concat_external(h, zeros);
  CHECK(padded.at(0, 3) == 0.0);
  CHECK(padded.at(0, 4) == 0.0);
}

TEST_CASE("load_token_embeddings groups rows per sample") {
  test_support::TempDir dir("ext");
  auto table = embed::load_token_embeddings(
      dir.file("e.txt", "s1\t0\t1 2\ns1\t1\t3 4\ns2\t0\t5 6\n"));
  CHECK(table.dim == 2);
  CHECK(table.rows.at("s1").size() == 2);
  CHECK(table.rows.at("s2")[0][1] == 6.0);
}

TEST_CASE("bilstm with zero params on zero input stays zero") {
  embed::BiLstmParams params = embed::BiLstmParams::zeros(3, 2);
  Tensor out = embed::bilstm_encode(Tensor::zeros({4, 3}), params);
  CHECK(out.rows() == 4);
  CHECK(out.cols() == 4);
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("bilstm on one token sees a single step in both directions") {
  std::mt19937_64 rng(9);
  embed::BiLstmParams params = embed::BiLstmParams::init(3, 2, rng);
  Tensor x = Tensor::matrix(1, 3, {0.3, -0.2, 0.5});
  Tensor out = embed::bilstm_encode(x, params);
  Tensor fwd = embed::run_lstm(x, params.forward);
  Tensor bwd = embed::run_lstm(x, params.backward);
  CHECK(out.at(0, 0) == doctest::Approx(fwd.at(0, 0)).epsilon(1e-15));
  CHECK(out.at(0, 2) == doctest::Approx(bwd.at(0, 0)).epsilon(1e-15));
}

TEST_CASE("backward direction equals forward on the reversed sequence") {
  std::mt19937_64 rng(17);
  embed::BiLstmParams params = embed::BiLstmParams::init(3, 2, rng);
  Tensor x = Tensor::uniform({5, 3}, -1, 1, rng);

  Tensor out = embed::bilstm_encode(x, params);

  std::vector<double> reversed(x.size());
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      reversed[r * 3 + c] = x.at(4 - r, c);
  Tensor manual = embed::run_lstm(Tensor::matrix(5, 3, reversed), params.backward);

  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(out.at(r, 2 + c) == doctest::Approx(manual.at(4 - r, c)).epsilon(1e-12));
}

TEST_CASE("bilstm gradients match finite differences") {
  std::mt19937_64 rng(23);
  embed::BiLstmParams params = embed::BiLstmParams::init(2, 2, rng);
  Tensor x = Tensor::uniform({3, 2}, -1, 1, rng);
  double err = grad_check(
      [&](const Tensor& w) {
        embed::BiLstmParams p = params;
        p.forward.w_input = w;
        return mean(embed::bilstm_encode(x, p));
      },
      params.forward.w_input, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("default-configured encoder emits dim 300") {
  std::mt19937_64 rng(29);
  embed::BiLstmParams params = embed::BiLstmParams::init(300, 150, rng);
  CHECK(params.output_dim() == 300);
  Tensor out = embed::bilstm_encode(Tensor::uniform({2, 300}, -1, 1, rng), params);
  CHECK(out.cols() == 300);
}
