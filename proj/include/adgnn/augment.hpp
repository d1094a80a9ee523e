#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "adgnn/embed.hpp"
#include "adgnn/ingest.hpp"

namespace adgnn::augment {

/// token -> candidate replacements; entries never contain the token itself
/// (self-synonyms are dropped at load).
struct SynonymLexicon {
  std::unordered_map<std::string, std::vector<std::string>> synonyms;
};

enum class Method { synonym, cf_embedding, sentence_delete, external };

struct AugmentPlan {
  Method method = Method::synonym;
  double factor = 1.0;        // new samples per original
  double replace_rate = 0.1;  // per-token replacement probability
  std::size_t top_k = 5;      // cf_embedding neighborhood size
  std::uint64_t seed = 0;
};

/// Pre-generated sample tied to the original it was derived from.
struct ExternalRow {
  std::string base_sample_id;
  ingest::Transcript transcript;  // sample_id/label filled on ingestion
};

/// A sample as the augmenters see it: transcript plus the resource paths it
/// inherits. Augmented copies get ids `<base>#<tag><k>`, keep the label, and
/// carry no parse (the harness synthesizes a chain parse when a dependency
/// term is needed).
struct AugmentSample {
  ingest::Transcript transcript;
  bool augmented = false;
};

/// Lexicon file: `token<TAB>syn1,syn2,...`.
SynonymLexicon load_synonym_lexicon(const std::string& path);

/// External-augmented file: JSON rows {base_sample_id, tokens,
/// sentence_bounds}.
std::vector<ExternalRow> load_external_rows(const std::string& path);

ingest::Transcript synonym_replace(const ingest::Transcript& t,
                                   const SynonymLexicon& lexicon, double rate,
                                   std::mt19937_64& rng);

ingest::Transcript cf_embedding_replace(const ingest::Transcript& t,
                                        const embed::WordVectorTable& cf_table,
                                        std::size_t top_k, double rate,
                                        std::mt19937_64& rng);

/// Removes one uniformly chosen sentence; transcripts with fewer than two
/// sentences come back unchanged.
ingest::Transcript delete_sentence(const ingest::Transcript& t, std::mt19937_64& rng);

/// Resolves external rows against the manifest: labels inherited from the
/// base sample, ids suffixed `#ext<k>` per base. Unknown bases are an error.
std::vector<ingest::Transcript> ingest_external_augmented(
    const std::vector<ExternalRow>& rows, const ingest::DatasetManifest& base);

struct AugmentResources {
  const SynonymLexicon* lexicon = nullptr;
  const embed::WordVectorTable* cf_table = nullptr;
  const std::vector<ingest::Transcript>* external = nullptr;  // pre-resolved
};

/// Expands a training split. Integer factor part: that many derived copies
/// per original; fractional part f: one copy for one uniformly chosen sample
/// out of each ceil(1/f)-sized block of a seeded shuffle. Originals are
/// always retained and ordered first. Per-sample rng streams are derived
/// from (plan.seed, sample_id), so a sample augments identically whatever
/// split it lands in.
std::vector<AugmentSample> augment_dataset(const std::vector<AugmentSample>& train_split,
                                           const AugmentPlan& plan,
                                           const AugmentResources& resources);

/// Base sample id of an (possibly augmented) id: everything before the first
/// '#'.
std::string base_id(const std::string& sample_id);

/// Left-headed chain parses for a transcript (token 0 of each sentence is
/// ROOT, token i hangs off token i-1): the projective fallback for augmented
/// samples that have no real parse.
std::vector<ingest::DependencyParse> chain_parses(const ingest::Transcript& t);

}  // namespace adgnn::augment
