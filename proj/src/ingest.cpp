#include "adgnn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace adgnn::ingest {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream is(text);
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool is_terminator(const std::string& tok) {
  return tok == "." || tok == "?" || tok == "!";
}

std::string strip_code_groups(const std::string& line) {
  // deletes "[" .. "]" spans; an unmatched "[" eats the rest of the line
  std::string out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '[') {
      std::size_t close = line.find(']', i + 1);
      if (close == std::string::npos) break;
      i = close + 1;
      continue;
    }
    out.push_back(line[i]);
    ++i;
  }
  return out;
}

std::string to_lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::size_t DependencyParse::root() const {
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] < 0) return i;
  }
  throw_error(ErrorKind::NoRoot, "parse has no root");
}

void check_sentence_bounds(const Transcript& t) {
  std::size_t cursor = 0;
  for (const auto& [start, end] : t.sentence_bounds) {
    if (start != cursor || end <= start) {
      throw_error(ErrorKind::AlignmentMismatch,
                  "sentence bounds do not partition the token range");
    }
    cursor = end;
  }
  if (cursor != t.tokens.size()) {
    throw_error(ErrorKind::AlignmentMismatch,
                "sentence bounds do not cover all tokens");
  }
}

Transcript parse_chat(const std::string& raw_text) {
  Transcript t;
  bool saw_participant = false;
  std::size_t sentence_start = 0;

  auto close_sentence = [&]() {
    if (t.tokens.size() > sentence_start) {
      t.sentence_bounds.emplace_back(sentence_start, t.tokens.size());
      sentence_start = t.tokens.size();
    }
  };

  for (const std::string& line : split_lines(raw_text)) {
    if (line.rfind("*PAR:", 0) != 0) continue;
    saw_participant = true;
    std::string body = strip_code_groups(line.substr(5));
    body.erase(std::remove_if(body.begin(), body.end(),
                              [](char c) { return c == '<' || c == '>'; }),
               body.end());
    for (std::string& tok : split_ws(body)) {
      if (tok[0] == '&' || tok[0] == '+') continue;
      t.tokens.push_back(to_lower_ascii(tok));
      if (is_terminator(t.tokens.back())) close_sentence();
    }
    close_sentence();  // lines without a terminator still form a sentence
  }
  if (!saw_participant) {
    throw_error(ErrorKind::NoParticipantLines, "no *PAR: line in input");
  }
  check_sentence_bounds(t);
  return t;
}

std::string render_transcript(const Transcript& t) {
  std::ostringstream os;
  for (const auto& [start, end] : t.sentence_bounds) {
    os << "*PAR:";
    for (std::size_t i = start; i < end; ++i) os << ' ' << t.tokens[i];
    os << '\n';
  }
  return os.str();
}

std::vector<DependencyParse> parse_conllu(const std::string& raw_text) {
  std::vector<DependencyParse> parses;
  DependencyParse current;

  auto flush = [&]() {
    if (current.size() == 0) return;
    std::size_t roots = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (current.head[i] < 0) {
        ++roots;
      } else if (static_cast<std::size_t>(current.head[i]) >= current.size()) {
        throw_error(ErrorKind::MalformedRow, "head index out of sentence range");
      }
    }
    if (roots == 0) throw_error(ErrorKind::NoRoot, "sentence without HEAD=0 row");
    if (roots > 1) throw_error(ErrorKind::MultipleRoots, "sentence with several HEAD=0 rows");
    parses.push_back(std::move(current));
    current = DependencyParse{};
  };

  for (const std::string& line : split_lines(raw_text)) {
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 10) {
      throw_error(ErrorKind::MalformedRow,
                  "expected 10 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) {
      continue;  // multiword token / empty node
    }
    std::size_t token_index;
    long head;
    try {
      token_index = std::stoul(id);
      head = std::stol(cols[6]);
    } catch (const std::exception&) {
      throw_error(ErrorKind::MalformedRow, "non-numeric ID or HEAD field");
    }
    if (token_index == 0 || head < 0) {
      throw_error(ErrorKind::MalformedRow, "ID must be >= 1 and HEAD >= 0");
    }
    if (token_index != current.size() + 1) {
      throw_error(ErrorKind::MalformedRow, "token ids must be consecutive from 1");
    }
    if (static_cast<std::size_t>(head) == token_index) {
      throw_error(ErrorKind::MalformedRow, "token cannot head itself");
    }
    current.head.push_back(static_cast<int>(head) - 1);  // HEAD=0 -> ROOT(-1)
    current.relation.push_back(cols[7]);
  }
  flush();
  return parses;
}

FeatureVectorTable load_feature_vectors(const std::string& path) {
  FeatureVectorTable table;
  std::istringstream is(read_file(path));
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw_error(ErrorKind::MalformedRow, "feature row without a tab in " + path);
    }
    std::string id = line.substr(0, tab);
    std::vector<double> vec;
    std::istringstream vs(line.substr(tab + 1));
    double v;
    while (vs >> v) {
      if (!std::isfinite(v)) {
        throw_error(ErrorKind::NonFinite, "non-finite feature for " + id);
      }
      vec.push_back(v);
    }
    if (vec.empty()) throw_error(ErrorKind::MalformedRow, "empty feature row for " + id);
    if (table.dim == 0) {
      table.dim = vec.size();
    } else if (vec.size() != table.dim) {
      throw_error(ErrorKind::DimensionMismatch,
                  "feature dim " + std::to_string(vec.size()) + " for " + id +
                      ", expected " + std::to_string(table.dim));
    }
    if (!table.vectors.emplace(id, std::move(vec)).second) {
      throw_error(ErrorKind::DuplicateId, "duplicate feature row for " + id);
    }
  }
  return table;
}

std::string resolve_path(const DatasetManifest& manifest, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(manifest.base_dir) / p).string();
}

DatasetManifest load_manifest(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw_error(ErrorKind::MalformedManifest, std::string(e.what()));
  }
  if (!doc.is_array()) {
    throw_error(ErrorKind::MalformedManifest, "manifest must be a JSON array");
  }

  DatasetManifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();
  if (manifest.base_dir.empty()) manifest.base_dir = ".";

  std::unordered_map<std::string, bool> seen;
  for (const json& row : doc) {
    ManifestRow r;
    try {
      r.sample_id = row.at("sample_id").get<std::string>();
      r.label = row.at("label").get<int>();
      r.transcript_path = row.at("transcript_path").get<std::string>();
      r.conllu_path = row.at("conllu_path").get<std::string>();
      if (row.contains("audio_feat_path")) {
        r.audio_feat_path = row.at("audio_feat_path").get<std::string>();
      }
      if (row.contains("tts_feat_path")) {
        r.tts_feat_path = row.at("tts_feat_path").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw_error(ErrorKind::MalformedManifest, std::string(e.what()));
    }
    if (r.label != 0 && r.label != 1) {
      throw_error(ErrorKind::BadLabel,
                  "label for " + r.sample_id + " must be 0 or 1");
    }
    if (!seen.emplace(r.sample_id, true).second) {
      throw_error(ErrorKind::DuplicateId, "duplicate sample_id " + r.sample_id);
    }
    manifest.rows.push_back(std::move(r));
  }

  for (const ManifestRow& r : manifest.rows) {
    std::vector<std::string> paths = {r.transcript_path, r.conllu_path};
    if (r.audio_feat_path) paths.push_back(*r.audio_feat_path);
    if (r.tts_feat_path) paths.push_back(*r.tts_feat_path);
    for (const std::string& p : paths) {
      if (!fs::exists(resolve_path(manifest, p))) {
        throw_error(ErrorKind::MissingFile,
                    p + " (referenced by " + r.sample_id + ")");
      }
    }
  }
  return manifest;
}

}  // namespace adgnn::ingest
