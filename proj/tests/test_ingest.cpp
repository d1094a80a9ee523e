#include "adgnn/ingest.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace adgnn;
using ingest::Transcript;

TEST_CASE("parse_chat keeps participant lines and strips codes") {
  Transcript t = ingest::parse_chat("*PAR: the boy [//] &uh is falling .\n*INV: ok .");
  CHECK(t.tokens == std::vector<std::string>{"the", "boy", "is", "falling", "."});
  REQUIRE(t.sentence_bounds.size() == 1);
  CHECK(t.sentence_bounds[0] == std::pair<std::size_t, std::size_t>{0, 5});
}

TEST_CASE("parse_chat makes one sentence per utterance") {
  Transcript t = ingest::parse_chat("*PAR: ok .\n*PAR: mhm .");
  REQUIRE(t.sentence_bounds.size() == 2);
  CHECK(t.sentence_bounds[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(t.sentence_bounds[1] == std::pair<std::size_t, std::size_t>{2, 4});
}

TEST_CASE("parse_chat without participant lines is an error") {
  try {
    ingest::parse_chat("*INV: ok .\n*INV: go on .");
    FAIL("expected NoParticipantLines");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoParticipantLines);
  }
}

TEST_CASE("parse_chat lowercases and strips angle brackets") {
  Transcript t = ingest::parse_chat("*PAR: <The Boy> [/] Falls ?");
  CHECK(t.tokens == std::vector<std::string>{"the", "boy", "falls", "?"});
}

TEST_CASE("parse_chat splits sentences at mid-line terminators") {
  Transcript t = ingest::parse_chat("*PAR: ok . fine .");
  REQUIRE(t.sentence_bounds.size() == 2);
  CHECK(t.sentence_bounds[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(t.sentence_bounds[1] == std::pair<std::size_t, std::size_t>{2, 4});
}

TEST_CASE("parse_chat round-trips through render_transcript") {
  Transcript t = ingest::parse_chat(
      "*PAR: the boy [//] &uh is falling .\n"
      "*PAR: <and the> water +...\n"
      "*PAR: mother washes dishes .");
  Transcript again = ingest::parse_chat(ingest::render_transcript(t));
  CHECK(again.tokens == t.tokens);
  CHECK(again.sentence_bounds == t.sentence_bounds);
}

TEST_CASE("parse_chat cleaning is idempotent") {
  std::string raw = "*PAR: &um the <boy and> girl [x 2] run . ok ?";
  Transcript once = ingest::parse_chat(raw);
  Transcript twice = ingest::parse_chat(ingest::render_transcript(once));
  CHECK(once.tokens == twice.tokens);
  CHECK(once.sentence_bounds == twice.sentence_bounds);
}

TEST_CASE("sentence bounds always partition the token range") {
  for (const char* raw : {"*PAR: a .", "*PAR: a b\n*PAR: c .", "*PAR: x ? y !",
                          "*PAR: [+ exc]\n*PAR: words here ."}) {
    Transcript t = ingest::parse_chat(raw);
    CHECK_NOTHROW(ingest::check_sentence_bounds(t));
  }
}

TEST_CASE("parse_conllu maps a two-token sentence") {
  auto parses = ingest::parse_conllu(
      "1\tthe\t_\t_\t_\t_\t2\tdet\t_\t_\n"
      "2\tboy\t_\t_\t_\t_\t0\troot\t_\t_\n");
  REQUIRE(parses.size() == 1);
  CHECK(parses[0].head == std::vector<int>{1, -1});
  CHECK(parses[0].root() == 1);
  CHECK(parses[0].relation[0] == "det");
}

TEST_CASE("parse_conllu on empty input returns no sentences") {
  CHECK(ingest::parse_conllu("").empty());
  CHECK(ingest::parse_conllu("# just a comment\n\n").empty());
}

TEST_CASE("parse_conllu rejects wrong column counts") {
  try {
    ingest::parse_conllu("1\tboy\t0\n");
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRow);
  }
}

TEST_CASE("parse_conllu enforces exactly one root") {
  std::string two_roots =
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n";
  try {
    ingest::parse_conllu(two_roots);
    FAIL("expected MultipleRoots");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MultipleRoots);
  }
  std::string no_root =
      "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n";
  try {
    ingest::parse_conllu(no_root);
    FAIL("expected NoRoot");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoRoot);
  }
}

TEST_CASE("parse_conllu rejects self-headed tokens") {
  std::string self_head =
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t2\tdep\t_\t_\n";
  try {
    ingest::parse_conllu(self_head);
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRow);
  }
}

TEST_CASE("parse_conllu skips comments and multiword ranges") {
  auto parses = ingest::parse_conllu(
      "# sent_id = 1\n"
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tnot\t_\t_\t_\t_\t1\tadvmod\t_\t_\n"
      "\n"
      "1\tgo\t_\t_\t_\t_\t0\troot\t_\t_\n");
  REQUIRE(parses.size() == 2);
  CHECK(parses[0].size() == 2);
  CHECK(parses[1].size() == 1);
}

TEST_CASE("load_feature_vectors reads tab-separated rows") {
  test_support::TempDir dir("feat");
  std::string path = dir.file("a.feats", "s1\t1 2 3 4\ns2\t5 6 7 8\n");
  auto table = ingest::load_feature_vectors(path);
  CHECK(table.dim == 4);
  CHECK(table.vectors.size() == 2);
  CHECK(table.vectors.at("s2")[0] == 5.0);
}

TEST_CASE("load_feature_vectors rejects mixed dims and duplicates") {
  test_support::TempDir dir("feat2");
  try {
    ingest::load_feature_vectors(dir.file("bad.feats", "s1\t1 2 3 4\ns2\t1 2 3 4 5\n"));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
  try {
    ingest::load_feature_vectors(dir.file("dup.feats", "s1\t1 2\ns1\t3 4\n"));
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateId);
  }
}

namespace {

std::string minimal_manifest(const test_support::TempDir& dir) {
  dir.file("t1.cha", "*PAR: ok .\n");
  dir.file("t1.conllu", "1\tok\t_\t_\t_\t_\t0\troot\t_\t_\n2\t.\t_\t_\t_\t_\t1\tpunct\t_\t_\n");
  dir.file("t2.cha", "*PAR: mhm .\n");
  dir.file("t2.conllu", "1\tmhm\t_\t_\t_\t_\t0\troot\t_\t_\n2\t.\t_\t_\t_\t_\t1\tpunct\t_\t_\n");
  return dir.file("manifest.json", R"([
    {"sample_id": "s1", "label": 0, "transcript_path": "t1.cha", "conllu_path": "t1.conllu"},
    {"sample_id": "s2", "label": 1, "transcript_path": "t2.cha", "conllu_path": "t2.conllu"}
  ])");
}

}  // namespace

TEST_CASE("load_manifest resolves relative paths and counts rows") {
  test_support::TempDir dir("man");
  auto manifest = ingest::load_manifest(minimal_manifest(dir));
  CHECK(manifest.rows.size() == 2);
  CHECK(manifest.rows[1].label == 1);
}

TEST_CASE("load_manifest rejects duplicate ids") {
  test_support::TempDir dir("man2");
  dir.file("t.cha", "*PAR: ok .\n");
  dir.file("t.conllu", "1\tok\t_\t_\t_\t_\t0\troot\t_\t_\n");
  std::string path = dir.file("manifest.json", R"([
    {"sample_id": "s1", "label": 0, "transcript_path": "t.cha", "conllu_path": "t.conllu"},
    {"sample_id": "s1", "label": 1, "transcript_path": "t.cha", "conllu_path": "t.conllu"}
  ])");
  try {
    ingest::load_manifest(path);
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateId);
  }
}

TEST_CASE("load_manifest rejects dangling paths") {
  test_support::TempDir dir("man3");
  dir.file("t.cha", "*PAR: ok .\n");
  std::string path = dir.file("manifest.json", R"([
    {"sample_id": "s1", "label": 0, "transcript_path": "t.cha", "conllu_path": "missing.conllu"}
  ])");
  try {
    ingest::load_manifest(path);
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingFile);
  }
}

TEST_CASE("manifest rows without audio are accepted at load time") {
  // multimodal requirements are checked by the harness, not the loader
  test_support::TempDir dir("man4");
  auto manifest = ingest::load_manifest(minimal_manifest(dir));
  CHECK_FALSE(manifest.rows[0].audio_feat_path.has_value());
}
