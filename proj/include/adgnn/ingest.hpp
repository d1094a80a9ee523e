#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgnn/error.hpp"

namespace adgnn::ingest {

/// Cleaned token sequence with sentence boundaries. sentence_bounds are
/// half-open (start,end) pairs partitioning [0, tokens.size()) in order.
/// label: 0 = control, 1 = AD, -1 = not yet assigned (set from the manifest).
struct Transcript {
  std::string sample_id;
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> sentence_bounds;
  int label = -1;

  bool operator==(const Transcript&) const = default;
};

/// One sentence's dependency structure: head[i] is the 0-based local index of
/// token i's head, or -1 for the sentence ROOT (exactly one per sentence).
struct DependencyParse {
  std::vector<int> head;
  std::vector<std::string> relation;

  std::size_t size() const { return head.size(); }
  std::size_t root() const;
};

struct ManifestRow {
  std::string sample_id;
  int label = -1;
  std::string transcript_path;
  std::string conllu_path;
  std::optional<std::string> audio_feat_path;
  std::optional<std::string> tts_feat_path;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::string base_dir;  // relative paths in rows resolve against this
};

/// sample_id -> fixed-dimension feature vector.
struct FeatureVectorTable {
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t dim = 0;
};

/// Cleans a CHAT-subset transcript. Only "*PAR:" tier lines contribute.
/// Cleaning: "[...]" code groups deleted, '<'/'>' stripped, tokens starting
/// with '&' or '+' dropped, everything lowercased. A standalone ".", "?" or
/// "!" token ends a sentence; end of line closes any open sentence.
Transcript parse_chat(const std::string& raw_text);

/// Renders a Transcript as one "*PAR:" line per sentence. parse_chat of the
/// result reproduces the tokens and bounds exactly.
std::string render_transcript(const Transcript& t);

/// Standard 10-column CoNLL-U; '#' comments and multiword/empty-node ids
/// ("1-2", "1.1") are skipped; blank lines separate sentences; HEAD=0 is ROOT.
std::vector<DependencyParse> parse_conllu(const std::string& raw_text);

FeatureVectorTable load_feature_vectors(const std::string& path);

DatasetManifest load_manifest(const std::string& path);

/// Resolves a manifest-relative path.
std::string resolve_path(const DatasetManifest& manifest, const std::string& path);

void check_sentence_bounds(const Transcript& t);

}  // namespace adgnn::ingest
