#include "adgnn/config.hpp"

#include <cmath>
#include <set>

#include "nlohmann/json.hpp"

using json = nlohmann::json;

namespace adgnn::harness {

const char* to_string(Initializer v) {
  return v == Initializer::w2v_bilstm ? "w2v_bilstm" : "w2v_ext_bilstm";
}

const char* to_string(FusionMode v) {
  switch (v) {
    case FusionMode::none: return "none";
    case FusionMode::concat: return "concat";
    case FusionMode::cross: return "cross";
  }
  return "?";
}

const char* to_string(losses::GraphKind v) {
  switch (v) {
    case losses::GraphKind::dependency: return "dependency";
    case losses::GraphKind::dynamic: return "dynamic";
    case losses::GraphKind::fused: return "fused";
  }
  return "?";
}

const char* to_string(gnn::GnnKind v) {
  switch (v) {
    case gnn::GnnKind::sage: return "sage";
    case gnn::GnnKind::ggnn: return "ggnn";
    case gnn::GnnKind::none: return "none";
  }
  return "?";
}

const char* to_string(gnn::Aggregator v) {
  return v == gnn::Aggregator::mean ? "mean" : "lstm";
}

const char* to_string(gnn::Activation v) {
  return v == gnn::Activation::relu ? "relu" : "sigmoid";
}

const char* to_string(graph::DependencyTerm v) {
  return v == graph::DependencyTerm::normalized_adjacency ? "normalized_adjacency"
                                                          : "normalized_laplacian";
}

const char* to_string(augment::Method v) {
  switch (v) {
    case augment::Method::synonym: return "synonym";
    case augment::Method::cf_embedding: return "cf_embedding";
    case augment::Method::sentence_delete: return "sentence_delete";
    case augment::Method::external: return "external";
  }
  return "?";
}

namespace {

template <typename T>
T parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, T>> table,
             const char* field) {
  for (const auto& [name, v] : table) {
    if (value == name) return v;
  }
  throw_error(ErrorKind::InvalidConfig,
              std::string("bad value '") + value + "' for " + field);
}

Initializer parse_initializer(const std::string& s) {
  return parse_enum<Initializer>(
      s, {{"w2v_bilstm", Initializer::w2v_bilstm},
          {"w2v_ext_bilstm", Initializer::w2v_ext_bilstm}},
      "initializer");
}

losses::GraphKind parse_graph(const std::string& s) {
  return parse_enum<losses::GraphKind>(
      s, {{"dependency", losses::GraphKind::dependency},
          {"dynamic", losses::GraphKind::dynamic},
          {"fused", losses::GraphKind::fused}},
      "graph");
}

gnn::GnnKind parse_gnn(const std::string& s) {
  return parse_enum<gnn::GnnKind>(s,
                                  {{"sage", gnn::GnnKind::sage},
                                   {"ggnn", gnn::GnnKind::ggnn},
                                   {"none", gnn::GnnKind::none}},
                                  "gnn");
}

FusionMode parse_fusion(const std::string& s) {
  return parse_enum<FusionMode>(s,
                                {{"none", FusionMode::none},
                                 {"concat", FusionMode::concat},
                                 {"cross", FusionMode::cross}},
                                "fusion");
}

gnn::Aggregator parse_aggregator(const std::string& s) {
  return parse_enum<gnn::Aggregator>(
      s, {{"mean", gnn::Aggregator::mean}, {"lstm", gnn::Aggregator::lstm}},
      "aggregator");
}

gnn::Activation parse_activation(const std::string& s) {
  return parse_enum<gnn::Activation>(
      s, {{"relu", gnn::Activation::relu}, {"sigmoid", gnn::Activation::sigmoid}},
      "activation");
}

graph::DependencyTerm parse_dependency_term(const std::string& s) {
  return parse_enum<graph::DependencyTerm>(
      s,
      {{"normalized_adjacency", graph::DependencyTerm::normalized_adjacency},
       {"normalized_laplacian", graph::DependencyTerm::normalized_laplacian}},
      "dependency_term");
}

augment::Method parse_method(const std::string& s) {
  return parse_enum<augment::Method>(s,
                                     {{"synonym", augment::Method::synonym},
                                      {"cf_embedding", augment::Method::cf_embedding},
                                      {"sentence_delete", augment::Method::sentence_delete},
                                      {"external", augment::Method::external}},
                                     "augment.method");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "initializer", "graph", "gnn", "gnn_layers", "fusion", "clippo_mode",
      "batch_size", "epochs", "lr", "seed", "alpha", "beta", "gamma",
      "w_con", "w_origin", "w_tts", "epsilon", "lambda", "dependency_term",
      "row_normalize_dynamic", "temperature", "bilstm_hidden", "mlp_hidden",
      "fusion_dim", "cross_layers", "sample_size", "aggregator", "activation",
      "folds", "repeats", "stratify", "augment", "word_vectors",
      "token_embeddings", "lexicon", "cf_vectors", "external_augmented"};
  return keys;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw_error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw_error(ErrorKind::InvalidConfig, "config must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().count(key)) {
      throw_error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  try {
    if (doc.value("clippo_mode", false)) {
      cfg.clippo_mode = true;
      cfg.batch_size = 4;
      cfg.lr = 1.5e-5;
      cfg.epochs = 100;
    }
    if (doc.contains("initializer")) cfg.initializer = parse_initializer(doc["initializer"]);
    if (doc.contains("graph")) cfg.graph = parse_graph(doc["graph"]);
    if (doc.contains("gnn")) cfg.gnn_kind = parse_gnn(doc["gnn"]);
    if (doc.contains("gnn_layers")) cfg.gnn_layers = doc["gnn_layers"].get<std::size_t>();
    if (doc.contains("fusion")) cfg.fusion = parse_fusion(doc["fusion"]);
    if (doc.contains("batch_size")) cfg.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<std::size_t>();
    if (doc.contains("lr")) cfg.lr = doc["lr"].get<double>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("alpha")) cfg.reg.alpha = doc["alpha"].get<double>();
    if (doc.contains("beta")) cfg.reg.beta = doc["beta"].get<double>();
    if (doc.contains("gamma")) cfg.reg.gamma = doc["gamma"].get<double>();
    if (doc.contains("w_con")) cfg.multitask.w_con = doc["w_con"].get<double>();
    if (doc.contains("w_origin")) cfg.multitask.w_origin = doc["w_origin"].get<double>();
    if (doc.contains("w_tts")) cfg.multitask.w_tts = doc["w_tts"].get<double>();
    if (doc.contains("epsilon")) cfg.epsilon = doc["epsilon"].get<double>();
    if (doc.contains("lambda")) cfg.lambda = doc["lambda"].get<double>();
    if (doc.contains("dependency_term"))
      cfg.dependency_term = parse_dependency_term(doc["dependency_term"]);
    if (doc.contains("row_normalize_dynamic"))
      cfg.row_normalize_dynamic = doc["row_normalize_dynamic"].get<bool>();
    if (doc.contains("temperature")) cfg.temperature = doc["temperature"].get<double>();
    if (doc.contains("bilstm_hidden")) cfg.bilstm_hidden = doc["bilstm_hidden"].get<std::size_t>();
    if (doc.contains("mlp_hidden")) cfg.mlp_hidden = doc["mlp_hidden"].get<std::size_t>();
    if (doc.contains("fusion_dim")) cfg.fusion_dim = doc["fusion_dim"].get<std::size_t>();
    if (doc.contains("cross_layers")) cfg.cross_layers = doc["cross_layers"].get<std::size_t>();
    if (doc.contains("sample_size")) cfg.sample_size = doc["sample_size"].get<std::size_t>();
    if (doc.contains("aggregator")) cfg.aggregator = parse_aggregator(doc["aggregator"]);
    if (doc.contains("activation")) cfg.activation = parse_activation(doc["activation"]);
    if (doc.contains("folds")) cfg.folds = doc["folds"].get<std::size_t>();
    if (doc.contains("repeats")) cfg.repeats = doc["repeats"].get<std::size_t>();
    if (doc.contains("stratify")) cfg.stratify = doc["stratify"].get<bool>();
    if (doc.contains("word_vectors")) cfg.word_vectors_path = doc["word_vectors"].get<std::string>();
    if (doc.contains("token_embeddings"))
      cfg.token_embeddings_path = doc["token_embeddings"].get<std::string>();
    if (doc.contains("lexicon")) cfg.lexicon_path = doc["lexicon"].get<std::string>();
    if (doc.contains("cf_vectors")) cfg.cf_vectors_path = doc["cf_vectors"].get<std::string>();
    if (doc.contains("external_augmented"))
      cfg.external_augmented_path = doc["external_augmented"].get<std::string>();
    if (doc.contains("augment")) {
      const json& a = doc["augment"];
      augment::AugmentPlan plan;
      plan.method = parse_method(a.at("method").get<std::string>());
      if (a.contains("factor")) plan.factor = a["factor"].get<double>();
      if (a.contains("replace_rate")) plan.replace_rate = a["replace_rate"].get<double>();
      if (a.contains("top_k")) plan.top_k = a["top_k"].get<std::size_t>();
      if (a.contains("seed")) plan.seed = a["seed"].get<std::uint64_t>();
      cfg.augmentation = plan;
    }
  } catch (const json::exception& e) {
    throw_error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["initializer"] = to_string(cfg.initializer);
  doc["graph"] = to_string(cfg.graph);
  doc["gnn"] = to_string(cfg.gnn_kind);
  doc["gnn_layers"] = cfg.gnn_layers;
  doc["fusion"] = to_string(cfg.fusion);
  doc["clippo_mode"] = cfg.clippo_mode;
  doc["batch_size"] = cfg.batch_size;
  doc["epochs"] = cfg.epochs;
  doc["lr"] = cfg.lr;
  doc["seed"] = cfg.seed;
  doc["alpha"] = cfg.reg.alpha;
  doc["beta"] = cfg.reg.beta;
  doc["gamma"] = cfg.reg.gamma;
  doc["w_con"] = cfg.multitask.w_con;
  doc["w_origin"] = cfg.multitask.w_origin;
  doc["w_tts"] = cfg.multitask.w_tts;
  doc["epsilon"] = cfg.epsilon;
  doc["lambda"] = cfg.lambda;
  doc["dependency_term"] = to_string(cfg.dependency_term);
  doc["row_normalize_dynamic"] = cfg.row_normalize_dynamic;
  doc["temperature"] = cfg.temperature;
  doc["bilstm_hidden"] = cfg.bilstm_hidden;
  doc["mlp_hidden"] = cfg.mlp_hidden;
  doc["fusion_dim"] = cfg.fusion_dim;
  doc["cross_layers"] = cfg.cross_layers;
  doc["sample_size"] = cfg.sample_size;
  doc["aggregator"] = to_string(cfg.aggregator);
  doc["activation"] = to_string(cfg.activation);
  doc["folds"] = cfg.folds;
  doc["repeats"] = cfg.repeats;
  doc["stratify"] = cfg.stratify;
  doc["word_vectors"] = cfg.word_vectors_path;
  if (cfg.token_embeddings_path) doc["token_embeddings"] = *cfg.token_embeddings_path;
  if (cfg.lexicon_path) doc["lexicon"] = *cfg.lexicon_path;
  if (cfg.cf_vectors_path) doc["cf_vectors"] = *cfg.cf_vectors_path;
  if (cfg.external_augmented_path) doc["external_augmented"] = *cfg.external_augmented_path;
  if (cfg.augmentation) {
    json a;
    a["method"] = to_string(cfg.augmentation->method);
    a["factor"] = cfg.augmentation->factor;
    a["replace_rate"] = cfg.augmentation->replace_rate;
    a["top_k"] = cfg.augmentation->top_k;
    a["seed"] = cfg.augmentation->seed;
    doc["augment"] = std::move(a);
  }
  return doc.dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw_error(ErrorKind::InvalidConfig, msg); };
  if (cfg.gnn_kind != gnn::GnnKind::none && cfg.gnn_layers < 1) {
    fail("gnn_layers must be >= 1 unless gnn is none");
  }
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.epochs < 1) fail("epochs must be >= 1");
  if (!std::isfinite(cfg.lr)) fail("lr must be finite");
  if (cfg.epsilon < -1.0 || cfg.epsilon > 1.0) fail("epsilon must lie in [-1, 1]");
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) fail("lambda must lie in [0, 1]");
  if (cfg.reg.alpha < 0.0 || cfg.reg.beta < 0.0 || cfg.reg.gamma < 0.0) {
    fail("alpha, beta, gamma must be nonnegative");
  }
  if (!std::isfinite(cfg.multitask.w_con) || !std::isfinite(cfg.multitask.w_origin) ||
      !std::isfinite(cfg.multitask.w_tts)) {
    fail("multitask weights must be finite");
  }
  if (cfg.bilstm_hidden < 1) fail("bilstm_hidden must be >= 1");
  if (cfg.mlp_hidden < 1) fail("mlp_hidden must be >= 1");
  if (cfg.fusion_dim < 1) fail("fusion_dim must be >= 1");
  if (cfg.sample_size < 1) fail("sample_size must be >= 1");
  if (cfg.folds < 2) fail("folds must be >= 2");
  if (cfg.repeats < 1) fail("repeats must be >= 1");
  if (cfg.augmentation) {
    const auto& plan = *cfg.augmentation;
    if (plan.factor < 0.0) fail("augment.factor must be >= 0");
    if (plan.replace_rate < 0.0 || plan.replace_rate > 1.0) {
      fail("augment.replace_rate must lie in [0, 1]");
    }
    if (plan.top_k < 1) fail("augment.top_k must be >= 1");
    if (cfg.fusion != FusionMode::none || cfg.clippo_mode) {
      fail("text augmentation applies to text-only runs");
    }
  }
  if (cfg.clippo_mode && cfg.fusion != FusionMode::none) {
    fail("clippo_mode replaces the text pipeline; fusion must be none");
  }
}

}  // namespace adgnn::harness
