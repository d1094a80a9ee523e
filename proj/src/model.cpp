#include "adgnn/model.hpp"

#include <cmath>
#include <unordered_map>

#include "adgnn/losses.hpp"

namespace adgnn::model {

namespace {

using harness::ExperimentConfig;
using harness::FusionMode;
using harness::Initializer;

void push_lstm(std::vector<std::pair<std::string, Tensor>>& out,
               const std::string& prefix, const embed::LstmParams& p) {
  out.emplace_back(prefix + ".w_input", p.w_input);
  out.emplace_back(prefix + ".w_hidden", p.w_hidden);
  out.emplace_back(prefix + ".bias", p.bias);
}

void push_mlp(std::vector<std::pair<std::string, Tensor>>& out,
              const std::string& prefix, const heads::MlpParams& p) {
  out.emplace_back(prefix + ".w1", p.w1);
  out.emplace_back(prefix + ".b1", p.b1);
  out.emplace_back(prefix + ".w2", p.w2);
  out.emplace_back(prefix + ".b2", p.b2);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (text) {
    push_lstm(out, "bilstm.fwd", text->bilstm.forward);
    push_lstm(out, "bilstm.bwd", text->bilstm.backward);
    if (text->has_learner) out.emplace_back("graph_learner.weight", text->learner.weight);
    for (std::size_t i = 0; i < text->stack.sage_layers.size(); ++i) {
      const auto& layer = text->stack.sage_layers[i];
      std::string prefix = "sage." + std::to_string(i);
      out.emplace_back(prefix + ".weight", layer.weight);
      if (layer.has_lstm) push_lstm(out, prefix + ".agg", layer.aggregator);
    }
    for (std::size_t i = 0; i < text->stack.ggnn_layers.size(); ++i) {
      const auto& layer = text->stack.ggnn_layers[i];
      std::string prefix = "ggnn." + std::to_string(i);
      out.emplace_back(prefix + ".w_in", layer.w_in);
      out.emplace_back(prefix + ".w_out", layer.w_out);
      out.emplace_back(prefix + ".bias", layer.bias);
      out.emplace_back(prefix + ".w_reset", layer.w_reset);
      out.emplace_back(prefix + ".u_reset", layer.u_reset);
      out.emplace_back(prefix + ".w_update", layer.w_update);
      out.emplace_back(prefix + ".u_update", layer.u_update);
      out.emplace_back(prefix + ".w_cand", layer.w_cand);
      out.emplace_back(prefix + ".u_cand", layer.u_cand);
    }
    if (text->has_projection) {
      out.emplace_back("projection.text", text->projection.text);
      out.emplace_back("projection.audio", text->projection.audio);
    }
    for (std::size_t l = 0; l < text->cross.depth(); ++l) {
      out.emplace_back("cross." + std::to_string(l) + ".weight", text->cross.weights[l]);
      out.emplace_back("cross." + std::to_string(l) + ".bias", text->cross.biases[l]);
    }
    push_mlp(out, "mlp", text->mlp);
  }
  if (clippo) {
    out.emplace_back("clippo.extractor", clippo->extractor);
    push_mlp(out, "clippo.head", clippo->head);
  }
  return out;
}

std::vector<Tensor> Model::trainable_params() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_params()) out.push_back(tensor);
  return out;
}

Model build_model(const ExperimentConfig& cfg, std::size_t input_dim,
                  std::size_t audio_dim, std::mt19937_64& rng) {
  Model m;
  m.config = cfg;
  if (cfg.clippo_mode) {
    if (audio_dim == 0) {
      throw_error(ErrorKind::InvalidConfig, "clippo_mode needs audio features");
    }
    ClippoModel c;
    double bound = std::sqrt(6.0 / static_cast<double>(audio_dim + cfg.fusion_dim));
    c.extractor = Tensor::uniform({cfg.fusion_dim, audio_dim}, -bound, bound, rng, true);
    c.head = heads::MlpParams::init(cfg.fusion_dim, cfg.mlp_hidden, rng);
    m.clippo = std::move(c);
    return m;
  }

  TextModel t;
  std::size_t embed_dim = 2 * cfg.bilstm_hidden;
  t.bilstm = embed::BiLstmParams::init(input_dim, cfg.bilstm_hidden, rng);
  if (cfg.graph != losses::GraphKind::dependency) {
    t.learner = graph::GraphLearnerParams::init(embed_dim, cfg.epsilon, rng);
    t.has_learner = true;
  }
  t.stack.kind = cfg.gnn_kind;
  t.stack.sage_cfg.layers = cfg.gnn_layers;
  t.stack.sage_cfg.sample_size = cfg.sample_size;
  t.stack.sage_cfg.aggregator = cfg.aggregator;
  t.stack.sage_cfg.activation = cfg.activation;
  if (cfg.gnn_kind == gnn::GnnKind::sage) {
    for (std::size_t i = 0; i < cfg.gnn_layers; ++i) {
      t.stack.sage_layers.push_back(
          gnn::SageLayerParams::init(embed_dim, embed_dim, cfg.aggregator, rng));
    }
  } else if (cfg.gnn_kind == gnn::GnnKind::ggnn) {
    for (std::size_t i = 0; i < cfg.gnn_layers; ++i) {
      t.stack.ggnn_layers.push_back(gnn::GgnnLayerParams::init(embed_dim, rng));
    }
  }

  std::size_t classifier_in = embed_dim;
  if (cfg.fusion != FusionMode::none) {
    if (audio_dim == 0) {
      throw_error(ErrorKind::InvalidConfig, "fusion needs audio features");
    }
    t.projection = heads::ProjectionParams::init(embed_dim, audio_dim, cfg.fusion_dim, rng);
    t.has_projection = true;
    classifier_in = 2 * cfg.fusion_dim;
    if (cfg.fusion == FusionMode::cross) {
      t.cross = heads::CrossNetParams::init(classifier_in, cfg.cross_layers, rng);
    }
  }
  t.mlp = heads::MlpParams::init(classifier_in, cfg.mlp_hidden, rng);
  m.text = std::move(t);
  return m;
}

void load_params(Model& m, const std::vector<std::pair<std::string, Tensor>>& entries) {
  std::unordered_map<std::string, Tensor> by_name;
  for (const auto& [name, tensor] : entries) by_name.emplace(name, tensor);
  for (auto& [name, param] : m.named_params()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw_error(ErrorKind::MissingFeature, "checkpoint lacks parameter " + name);
    }
    if (it->second.shape() != param.shape()) {
      throw_error(ErrorKind::ShapeMismatch, "checkpoint shape mismatch for " + name);
    }
    param.mutable_values() = it->second.values();
    param.zero_grad();
  }
}

namespace {

Tensor initial_embeddings(const Model& m, const Sample& sample,
                          const Resources& resources) {
  const auto& cfg = m.config;
  Tensor h = embed::lookup(sample.transcript.tokens, resources.word_vectors);
  if (cfg.initializer == Initializer::w2v_ext_bilstm) {
    auto it = resources.token_embeddings.rows.find(sample.id);
    if (it == resources.token_embeddings.rows.end()) {
      throw_error(ErrorKind::MissingFeature,
                  "no external token embeddings for " + sample.id);
    }
    std::size_t n = it->second.size();
    std::size_t d = resources.token_embeddings.dim;
    std::vector<double> values;
    values.reserve(n * d);
    for (const auto& row : it->second) values.insert(values.end(), row.begin(), row.end());
    h = embed::concat_external(h, Tensor::matrix(n, d, std::move(values)));
  }
  return embed::bilstm_encode(h, m.text->bilstm);
}

}  // namespace

TextForward forward_text(const Model& m, const Sample& sample,
                         const Resources& resources, std::mt19937_64& rng) {
  if (!m.text) throw_error(ErrorKind::InvalidConfig, "text forward on a clippo model");
  const auto& cfg = m.config;
  if (sample.transcript.tokens.empty()) {
    throw_error(ErrorKind::EmptyGraph, "sample " + sample.id + " has no tokens");
  }

  TextForward out;
  out.h0 = initial_embeddings(m, sample, resources);

  graph::TextGraph g;
  switch (cfg.graph) {
    case losses::GraphKind::dependency:
      g = graph::build_dependency_graph(sample.transcript, sample.parses, out.h0);
      break;
    case losses::GraphKind::dynamic: {
      g = graph::learn_dynamic_graph(out.h0, m.text->learner);
      out.reg_adjacency = g.adjacency;
      break;
    }
    case losses::GraphKind::fused: {
      graph::TextGraph dep =
          graph::build_dependency_graph(sample.transcript, sample.parses, out.h0);
      Tensor dep_term = graph::normalized_dependency_term(dep, cfg.dependency_term);
      graph::TextGraph dyn = graph::learn_dynamic_graph(out.h0, m.text->learner);
      out.reg_adjacency = dyn.adjacency;  // regularize the learned graph, pre-fusion
      graph::FusionConfig fusion_cfg;
      fusion_cfg.lambda = cfg.lambda;
      fusion_cfg.dependency_term = cfg.dependency_term;
      fusion_cfg.row_normalize_dynamic = cfg.row_normalize_dynamic;
      g = graph::fuse_graphs(dep_term, dyn, fusion_cfg);
      break;
    }
  }

  Tensor hk = gnn::run_gnn(g, out.h0, m.text->stack, rng);
  Tensor pooled = heads::mean_pool(hk);

  if (cfg.fusion == FusionMode::none) {
    out.logits = heads::mlp_classify(pooled, m.text->mlp);
    return out;
  }
  if (sample.audio_feat.empty()) {
    throw_error(ErrorKind::MissingFeature, "no audio features for " + sample.id);
  }
  auto [text_proj, audio_proj] = heads::project_pair(
      pooled, Tensor::vector(sample.audio_feat), m.text->projection);
  Tensor fused = heads::fuse_concat(text_proj, audio_proj);
  if (cfg.fusion == FusionMode::cross) {
    fused = heads::cross_network(fused, m.text->cross);
  }
  out.logits = heads::mlp_classify(fused, m.text->mlp);
  return out;
}

Tensor text_sample_loss(const Model& m, const Sample& sample,
                        const Resources& resources, std::mt19937_64& rng) {
  TextForward fwd = forward_text(m, sample, resources, rng);
  Tensor l_pred = losses::cross_entropy(fwd.logits, sample.label);
  if (m.config.graph == losses::GraphKind::dependency) {
    return losses::total_loss(l_pred, {}, losses::GraphKind::dependency);
  }
  Tensor l_graph = losses::graph_regularization(fwd.h0, fwd.reg_adjacency, m.config.reg);
  return losses::total_loss(l_pred, l_graph, m.config.graph);
}

Tensor clippo_batch_loss(const Model& m, const std::vector<const Sample*>& batch) {
  if (!m.clippo) throw_error(ErrorKind::InvalidConfig, "clippo loss on a text model");
  if (batch.empty()) throw_error(ErrorKind::EmptySplit, "empty clippo batch");
  std::size_t d = m.clippo->extractor.cols();
  std::vector<double> origin, tts;
  std::vector<int> labels;
  for (const Sample* s : batch) {
    if (s->audio_feat.size() != d || s->tts_feat.size() != d) {
      throw_error(ErrorKind::MissingFeature,
                  "sample " + s->id + " lacks matching audio/tts features");
    }
    origin.insert(origin.end(), s->audio_feat.begin(), s->audio_feat.end());
    tts.insert(tts.end(), s->tts_feat.begin(), s->tts_feat.end());
    labels.push_back(s->label);
  }
  std::size_t n = batch.size();
  Tensor origin_raw = Tensor::matrix(n, d, std::move(origin));
  Tensor tts_raw = Tensor::matrix(n, d, std::move(tts));
  Tensor ext_t = transpose(m.clippo->extractor);
  Tensor origin_feats = matmul(origin_raw, ext_t);
  Tensor tts_feats = matmul(tts_raw, ext_t);

  losses::ContrastiveBatch cb;
  cb.origin_feats = origin_feats;
  cb.tts_feats = tts_feats;
  cb.temperature = m.config.temperature;
  Tensor l_con = losses::contrastive_loss(cb);
  Tensor l_origin =
      losses::cross_entropy_rows(heads::mlp_classify_rows(origin_feats, m.clippo->head), labels);
  Tensor l_tts =
      losses::cross_entropy_rows(heads::mlp_classify_rows(tts_feats, m.clippo->head), labels);
  return losses::multitask_loss(l_con, l_origin, l_tts, m.config.multitask);
}

Tensor clippo_logits(const Model& m, const Sample& sample) {
  if (!m.clippo) throw_error(ErrorKind::InvalidConfig, "clippo logits on a text model");
  if (sample.audio_feat.size() != m.clippo->extractor.cols()) {
    throw_error(ErrorKind::MissingFeature, "no audio features for " + sample.id);
  }
  Tensor feats = matmul(m.clippo->extractor, Tensor::vector(sample.audio_feat));
  return heads::mlp_classify(feats, m.clippo->head);
}

int predict_label(const Tensor& logits) {
  if (logits.size() != 2) throw_error(ErrorKind::ShapeMismatch, "expected 2 logits");
  return logits.at(1) > logits.at(0) ? 1 : 0;
}

}  // namespace adgnn::model
