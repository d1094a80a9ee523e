#include "adgnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "adgnn/rng.hpp"
#include "nlohmann/json.hpp"

using json = nlohmann::json;

namespace adgnn::augment {

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return -1.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

SynonymLexicon load_synonym_lexicon(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  SynonymLexicon lex;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw_error(ErrorKind::MalformedRow, "lexicon row without a tab");
    }
    std::string token = line.substr(0, tab);
    std::vector<std::string> syns;
    for (std::string& s : split_commas(line.substr(tab + 1))) {
      if (s != token) syns.push_back(std::move(s));  // never map a token to itself
    }
    if (syns.empty()) continue;
    if (!lex.synonyms.emplace(token, std::move(syns)).second) {
      throw_error(ErrorKind::DuplicateToken, token);
    }
  }
  return lex;
}

std::vector<ExternalRow> load_external_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw_error(ErrorKind::MalformedRow, std::string(e.what()));
  }
  if (!doc.is_array()) {
    throw_error(ErrorKind::MalformedRow, "external file must be a JSON array");
  }
  std::vector<ExternalRow> rows;
  for (const json& item : doc) {
    ExternalRow row;
    try {
      row.base_sample_id = item.at("base_sample_id").get<std::string>();
      row.transcript.tokens = item.at("tokens").get<std::vector<std::string>>();
      for (const json& b : item.at("sentence_bounds")) {
        row.transcript.sentence_bounds.emplace_back(b.at(0).get<std::size_t>(),
                                                    b.at(1).get<std::size_t>());
      }
    } catch (const json::exception& e) {
      throw_error(ErrorKind::MalformedRow, std::string(e.what()));
    }
    ingest::check_sentence_bounds(row.transcript);
    rows.push_back(std::move(row));
  }
  return rows;
}

ingest::Transcript synonym_replace(const ingest::Transcript& t,
                                   const SynonymLexicon& lexicon, double rate,
                                   std::mt19937_64& rng) {
  if (rate < 0.0 || rate > 1.0) {
    throw_error(ErrorKind::InvalidConfig, "replace rate must lie in [0, 1]");
  }
  ingest::Transcript out = t;
  for (std::string& token : out.tokens) {
    auto it = lexicon.synonyms.find(token);
    if (it == lexicon.synonyms.end()) continue;
    if (rng_uniform01(rng) < rate) {
      token = it->second[rng_index(rng, it->second.size())];
    }
  }
  return out;
}

ingest::Transcript cf_embedding_replace(const ingest::Transcript& t,
                                        const embed::WordVectorTable& cf_table,
                                        std::size_t top_k, double rate,
                                        std::mt19937_64& rng) {
  if (top_k < 1) throw_error(ErrorKind::InvalidConfig, "top_k must be >= 1");
  if (rate < 0.0 || rate > 1.0) {
    throw_error(ErrorKind::InvalidConfig, "replace rate must lie in [0, 1]");
  }
  // deterministic vocabulary order for tie-breaking
  std::vector<std::string> vocab;
  vocab.reserve(cf_table.vectors.size());
  for (const auto& [token, _] : cf_table.vectors) vocab.push_back(token);
  std::sort(vocab.begin(), vocab.end());

  std::unordered_map<std::string, std::vector<std::string>> neighbor_cache;
  auto neighbors = [&](const std::string& token) -> const std::vector<std::string>& {
    auto cached = neighbor_cache.find(token);
    if (cached != neighbor_cache.end()) return cached->second;
    const auto& vec = cf_table.vectors.at(token);
    std::vector<std::pair<double, std::string>> scored;
    for (const std::string& other : vocab) {
      if (other == token) continue;
      scored.emplace_back(cosine(vec, cf_table.vectors.at(other)), other);
    }
    std::size_t k = std::min(top_k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    std::vector<std::string> near;
    for (std::size_t i = 0; i < k; ++i) near.push_back(scored[i].second);
    return neighbor_cache.emplace(token, std::move(near)).first->second;
  };

  ingest::Transcript out = t;
  for (std::string& token : out.tokens) {
    if (!cf_table.vectors.count(token)) continue;  // OOV untouched
    if (rng_uniform01(rng) < rate) {
      const auto& near = neighbors(token);
      if (!near.empty()) token = near[rng_index(rng, near.size())];
    }
  }
  return out;
}

ingest::Transcript delete_sentence(const ingest::Transcript& t, std::mt19937_64& rng) {
  if (t.sentence_bounds.size() < 2) return t;
  std::size_t victim = rng_index(rng, t.sentence_bounds.size());
  auto [start, end] = t.sentence_bounds[victim];
  std::size_t removed = end - start;

  ingest::Transcript out;
  out.sample_id = t.sample_id;
  out.label = t.label;
  out.tokens.assign(t.tokens.begin(), t.tokens.begin() + start);
  out.tokens.insert(out.tokens.end(), t.tokens.begin() + end, t.tokens.end());
  for (std::size_t s = 0; s < t.sentence_bounds.size(); ++s) {
    if (s == victim) continue;
    auto [bs, be] = t.sentence_bounds[s];
    if (bs >= end) {
      out.sentence_bounds.emplace_back(bs - removed, be - removed);
    } else {
      out.sentence_bounds.emplace_back(bs, be);
    }
  }
  ingest::check_sentence_bounds(out);
  return out;
}

std::vector<ingest::Transcript> ingest_external_augmented(
    const std::vector<ExternalRow>& rows, const ingest::DatasetManifest& base) {
  std::unordered_map<std::string, int> labels;
  for (const auto& row : base.rows) labels[row.sample_id] = row.label;

  std::unordered_map<std::string, std::size_t> per_base_count;
  std::vector<ingest::Transcript> out;
  for (const ExternalRow& row : rows) {
    auto it = labels.find(row.base_sample_id);
    if (it == labels.end()) {
      throw_error(ErrorKind::UnknownBaseId, row.base_sample_id);
    }
    ingest::Transcript t = row.transcript;
    std::size_t ordinal = ++per_base_count[row.base_sample_id];
    t.sample_id = row.base_sample_id + "#ext" + std::to_string(ordinal);
    t.label = it->second;
    out.push_back(std::move(t));
  }
  return out;
}

std::string base_id(const std::string& sample_id) {
  return sample_id.substr(0, sample_id.find('#'));
}

std::vector<ingest::DependencyParse> chain_parses(const ingest::Transcript& t) {
  std::vector<ingest::DependencyParse> parses;
  for (const auto& [start, end] : t.sentence_bounds) {
    ingest::DependencyParse p;
    for (std::size_t i = start; i < end; ++i) {
      p.head.push_back(i == start ? -1 : static_cast<int>(i - start - 1));
      p.relation.push_back(i == start ? "root" : "chain");
    }
    parses.push_back(std::move(p));
  }
  return parses;
}

namespace {

ingest::Transcript apply_method(const ingest::Transcript& t, const AugmentPlan& plan,
                                const AugmentResources& resources,
                                std::mt19937_64& rng) {
  switch (plan.method) {
    case Method::synonym:
      if (!resources.lexicon) {
        throw_error(ErrorKind::InvalidConfig, "synonym augmentation needs a lexicon");
      }
      return synonym_replace(t, *resources.lexicon, plan.replace_rate, rng);
    case Method::cf_embedding:
      if (!resources.cf_table) {
        throw_error(ErrorKind::InvalidConfig,
                    "cf_embedding augmentation needs counter-fitted vectors");
      }
      return cf_embedding_replace(t, *resources.cf_table, plan.top_k,
                                  plan.replace_rate, rng);
    case Method::sentence_delete:
      return delete_sentence(t, rng);
    case Method::external:
      throw_error(ErrorKind::InvalidConfig, "external rows are ingested, not generated");
  }
  throw_error(ErrorKind::InvalidConfig, "unknown augmentation method");
}

}  // namespace

std::vector<AugmentSample> augment_dataset(const std::vector<AugmentSample>& train_split,
                                           const AugmentPlan& plan,
                                           const AugmentResources& resources) {
  if (plan.factor < 0.0) {
    throw_error(ErrorKind::InvalidConfig, "augmentation factor must be >= 0");
  }
  std::vector<AugmentSample> out = train_split;  // originals always retained

  if (plan.method == Method::external) {
    if (!resources.external) {
      throw_error(ErrorKind::InvalidConfig, "external augmentation needs a rows file");
    }
    std::unordered_map<std::string, bool> in_train;
    for (const auto& s : train_split) in_train[s.transcript.sample_id] = true;
    for (const ingest::Transcript& t : *resources.external) {
      if (!in_train.count(base_id(t.sample_id))) continue;  // other folds' bases
      AugmentSample a;
      a.transcript = t;
      a.augmented = true;
      out.push_back(std::move(a));
    }
    return out;
  }

  auto derive = [&](const ingest::Transcript& t, std::size_t copy) {
    std::mt19937_64 rng(mix_seed(mix_seed(plan.seed, fnv1a64(t.sample_id)), copy));
    AugmentSample a;
    a.transcript = apply_method(t, plan, resources, rng);
    a.transcript.sample_id = t.sample_id + "#aug" + std::to_string(copy + 1);
    a.augmented = true;
    return a;
  };

  std::size_t whole = static_cast<std::size_t>(plan.factor);
  double fractional = plan.factor - static_cast<double>(whole);

  for (const AugmentSample& s : train_split) {
    for (std::size_t c = 0; c < whole; ++c) out.push_back(derive(s.transcript, c));
  }

  if (fractional > 0.0) {
    // one pick per block of ceil(1/f) samples in a seeded shuffle
    std::size_t block = static_cast<std::size_t>(std::ceil(1.0 / fractional));
    std::vector<std::size_t> order(train_split.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(plan.seed, 0x5e1ec7ULL));
    rng_shuffle(rng, order);
    for (std::size_t start = 0; start < order.size(); start += block) {
      std::size_t len = std::min(block, order.size() - start);
      std::size_t pick = order[start + rng_index(rng, len)];
      out.push_back(derive(train_split[pick].transcript, whole));
    }
  }
  return out;
}

}  // namespace adgnn::augment
