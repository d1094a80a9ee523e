#include "adgnn/augment.hpp"

#include <cmath>
#include <random>

#include "adgnn/rng.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace adgnn;
using ingest::Transcript;

namespace {

Transcript simple_transcript(const std::string& id,
                             const std::vector<std::vector<std::string>>& sentences,
                             int label = 0) {
  Transcript t;
  t.sample_id = id;
  t.label = label;
  std::size_t cursor = 0;
  for (const auto& sentence : sentences) {
    for (const auto& tok : sentence) t.tokens.push_back(tok);
    t.sentence_bounds.emplace_back(cursor, cursor + sentence.size());
    cursor += sentence.size();
  }
  return t;
}

}  // namespace

TEST_CASE("synonym_replace at rate 0 is the identity") {
  augment::SynonymLexicon lex;
  lex.synonyms["boy"] = {"lad"};
  Transcript t = simple_transcript("s", {{"the", "boy", "."}});
  std::mt19937_64 rng(1);
  CHECK(augment::synonym_replace(t, lex, 0.0, rng) == t);
}

TEST_CASE("synonym_replace at rate 1 replaces every entry token") {
  augment::SynonymLexicon lex;
  lex.synonyms["boy"] = {"lad"};
  Transcript t = simple_transcript("s", {{"the", "boy", "."}});
  std::mt19937_64 rng(1);
  Transcript out = augment::synonym_replace(t, lex, 1.0, rng);
  CHECK(out.tokens == std::vector<std::string>{"the", "lad", "."});
  CHECK(out.sentence_bounds == t.sentence_bounds);
  CHECK(out.label == t.label);
}

TEST_CASE("synonym_replace is deterministic under a fixed seed") {
  augment::SynonymLexicon lex;
  lex.synonyms["a"] = {"x", "y", "z"};
  lex.synonyms["b"] = {"p", "q"};
  Transcript t = simple_transcript("s", {{"a", "b", "a", "b", "a", "."}});
  std::mt19937_64 r1(9), r2(9);
  CHECK(augment::synonym_replace(t, lex, 0.5, r1) ==
        augment::synonym_replace(t, lex, 0.5, r2));
}

TEST_CASE("lexicon loader drops self-synonyms") {
  test_support::TempDir dir("lex");
  auto lex = augment::load_synonym_lexicon(
      dir.file("l.tsv", "boy\tboy,lad\nrun\trun\n"));
  CHECK(lex.synonyms.at("boy") == std::vector<std::string>{"lad"});
  CHECK_FALSE(lex.synonyms.count("run"));  // only a self-mapping: removed
}

TEST_CASE("cf replacement leaves out-of-vocabulary tokens untouched") {
  embed::WordVectorTable cf;
  cf.dim = 2;
  cf.vectors["boy"] = {1, 0};
  cf.vectors["lad"] = {0.9, 0.1};
  Transcript t = simple_transcript("s", {{"zzz", "."}});
  std::mt19937_64 rng(1);
  CHECK(augment::cf_embedding_replace(t, cf, 1, 1.0, rng) == t);
}

TEST_CASE("cf replacement follows brute-force cosine ranking") {
  embed::WordVectorTable cf;
  cf.dim = 2;
  cf.vectors["a"] = {1.0, 0.0};
  cf.vectors["b"] = {0.95, 0.05};  // nearest to a
  cf.vectors["c"] = {0.0, 1.0};
  Transcript t = simple_transcript("s", {{"a"}});
  std::mt19937_64 rng(4);
  // top_k = 1 forces the unique nearest neighbor
  Transcript out = augment::cf_embedding_replace(t, cf, 1, 1.0, rng);
  CHECK(out.tokens == std::vector<std::string>{"b"});
}

TEST_CASE("cf top_k larger than the vocabulary picks among all others") {
  embed::WordVectorTable cf;
  cf.dim = 2;
  cf.vectors["a"] = {1.0, 0.0};
  cf.vectors["b"] = {0.8, 0.2};
  cf.vectors["c"] = {0.6, 0.4};
  Transcript t = simple_transcript("s", {{"a", "a", "a", "a", "a", "a"}});
  std::mt19937_64 rng(11);
  Transcript out = augment::cf_embedding_replace(t, cf, 99, 1.0, rng);
  bool saw_b = false, saw_c = false;
  for (const auto& tok : out.tokens) {
    CHECK(tok != "a");
    saw_b = saw_b || tok == "b";
    saw_c = saw_c || tok == "c";
  }
  CHECK(saw_b);
  CHECK(saw_c);
}

TEST_CASE("delete_sentence leaves single-sentence transcripts unchanged") {
  Transcript t = simple_transcript("s", {{"only", "one", "."}});
  std::mt19937_64 rng(1);
  CHECK(augment::delete_sentence(t, rng) == t);
}

TEST_CASE("delete_sentence removes exactly one sentence") {
  Transcript t = simple_transcript("s", {{"a", "."}, {"b", "b", "."}});
  std::mt19937_64 rng(1);
  Transcript out = augment::delete_sentence(t, rng);
  CHECK(out.sentence_bounds.size() == 1);
  CHECK(out.tokens.size() < t.tokens.size());
  CHECK_NOTHROW(ingest::check_sentence_bounds(out));
}

TEST_CASE("delete_sentence recomputes bounds after a middle deletion") {
  Transcript t = simple_transcript("s", {{"a", "."}, {"b", "."}, {"c", "c", "."}});
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::mt19937_64 rng(seed);
    Transcript out = augment::delete_sentence(t, rng);
    CHECK(out.sentence_bounds.size() == 2);
    CHECK_NOTHROW(ingest::check_sentence_bounds(out));
  }
}

TEST_CASE("delete_sentence is deterministic under a fixed seed") {
  Transcript t = simple_transcript("s", {{"a", "."}, {"b", "."}, {"c", "."}});
  std::mt19937_64 r1(13), r2(13);
  CHECK(augment::delete_sentence(t, r1) == augment::delete_sentence(t, r2));
}

namespace {

ingest::DatasetManifest two_row_manifest() {
  ingest::DatasetManifest manifest;
  manifest.base_dir = ".";
  ingest::ManifestRow r1;
  r1.sample_id = "s1";
  r1.label = 0;
  ingest::ManifestRow r2;
  r2.sample_id = "s2";
  r2.label = 1;
  manifest.rows = {r1, r2};
  return manifest;
}

}  // namespace

TEST_CASE("external rows inherit labels and get suffixed ids") {
  std::vector<augment::ExternalRow> rows(2);
  rows[0].base_sample_id = "s1";
  rows[0].transcript = simple_transcript("", {{"new", "words", "."}});
  rows[1].base_sample_id = "s2";
  rows[1].transcript = simple_transcript("", {{"more", "."}});
  auto samples = augment::ingest_external_augmented(rows, two_row_manifest());
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].sample_id == "s1#ext1");
  CHECK(samples[0].label == 0);
  CHECK(samples[1].sample_id == "s2#ext1");
  CHECK(samples[1].label == 1);
}

TEST_CASE("external rows with unknown bases are rejected") {
  std::vector<augment::ExternalRow> rows(1);
  rows[0].base_sample_id = "nope";
  rows[0].transcript = simple_transcript("", {{"x", "."}});
  try {
    augment::ingest_external_augmented(rows, two_row_manifest());
    FAIL("expected UnknownBaseId");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownBaseId);
  }
}

TEST_CASE("an empty external file leaves the dataset unchanged") {
  auto samples = augment::ingest_external_augmented({}, two_row_manifest());
  CHECK(samples.empty());
}

namespace {

std::vector<augment::AugmentSample> make_split(std::size_t n) {
  std::vector<augment::AugmentSample> split;
  for (std::size_t i = 0; i < n; ++i) {
    augment::AugmentSample s;
    s.transcript = simple_transcript("s" + std::to_string(i),
                                     {{"tok", "a", "."}, {"tok", "b", "."}},
                                     static_cast<int>(i % 2));
    split.push_back(std::move(s));
  }
  return split;
}

augment::AugmentPlan delete_plan(double factor) {
  augment::AugmentPlan plan;
  plan.method = augment::Method::sentence_delete;
  plan.factor = factor;
  plan.seed = 77;
  return plan;
}

}  // namespace

TEST_CASE("factor 1 doubles the training split") {
  auto out = augment::augment_dataset(make_split(50), delete_plan(1.0), {});
  CHECK(out.size() == 100);
}

TEST_CASE("factor 5 yields six times the original size") {
  auto out = augment::augment_dataset(make_split(50), delete_plan(5.0), {});
  CHECK(out.size() == 300);
}

TEST_CASE("factor 0.2 augments one sample per block of five") {
  auto out = augment::augment_dataset(make_split(50), delete_plan(0.2), {});
  CHECK(out.size() == 60);
}

TEST_CASE("augmentation retains originals and never alters labels") {
  auto split = make_split(10);
  auto out = augment::augment_dataset(split, delete_plan(1.0), {});
  for (std::size_t i = 0; i < split.size(); ++i) {
    CHECK(out[i].transcript == split[i].transcript);
    CHECK_FALSE(out[i].augmented);
  }
  for (std::size_t i = split.size(); i < out.size(); ++i) {
    CHECK(out[i].augmented);
    std::string base = augment::base_id(out[i].transcript.sample_id);
    auto it = std::find_if(split.begin(), split.end(), [&](const auto& s) {
      return s.transcript.sample_id == base;
    });
    REQUIRE(it != split.end());
    CHECK(out[i].transcript.label == it->transcript.label);
  }
}

TEST_CASE("augmentation is deterministic under a fixed plan seed") {
  auto a = augment::augment_dataset(make_split(8), delete_plan(1.2), {});
  auto b = augment::augment_dataset(make_split(8), delete_plan(1.2), {});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].transcript == b[i].transcript);
  }
}

TEST_CASE("synonym and cf replacement preserve token counts") {
  augment::SynonymLexicon lex;
  lex.synonyms["tok"] = {"word"};
  augment::AugmentPlan plan;
  plan.method = augment::Method::synonym;
  plan.factor = 1.0;
  plan.replace_rate = 1.0;
  plan.seed = 3;
  augment::AugmentResources res;
  res.lexicon = &lex;
  auto split = make_split(6);
  auto out = augment::augment_dataset(split, plan, res);
  REQUIRE(out.size() == 12);
  for (std::size_t i = 6; i < 12; ++i) {
    CHECK(out[i].transcript.tokens.size() == 6);
    CHECK(out[i].transcript.sentence_bounds == split[i - 6].transcript.sentence_bounds);
  }
}

TEST_CASE("sentence deletion strictly shrinks multi-sentence samples") {
  auto out = augment::augment_dataset(make_split(6), delete_plan(1.0), {});
  for (std::size_t i = 6; i < out.size(); ++i) {
    CHECK(out[i].transcript.tokens.size() < 6);
  }
}
