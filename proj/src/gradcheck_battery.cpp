#include "adgnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adgnn/embed.hpp"
#include "adgnn/gnn.hpp"
#include "adgnn/graph.hpp"
#include "adgnn/heads.hpp"
#include "adgnn/losses.hpp"
#include "adgnn/rng.hpp"
#include "adgnn/tensor.hpp"

namespace adgnn::harness {

namespace {

constexpr double kThreshold = 1e-4;

/// Random values kept away from zero so relu/threshold kinks sit outside the
/// finite-difference step.
Tensor away_from_zero(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  Tensor t = Tensor::uniform(std::move(shape), -1.0, 1.0, rng);
  for (double& v : t.mutable_values()) {
    if (std::abs(v) < 0.05) v += v >= 0.0 ? 0.1 : -0.1;
  }
  return t;
}

Tensor positive(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  return Tensor::uniform(std::move(shape), 0.1, 1.0, rng);
}

/// Threshold placed in the widest gap of the off-diagonal similarities, so a
/// 1e-5 perturbation can never flip an edge during the numeric pass.
double safe_epsilon(const Tensor& h, const Tensor& weight) {
  Tensor unit = l2_normalize(hadamard(h, weight), 1);
  Tensor sim = matmul(unit, transpose(unit));
  std::size_t n = sim.rows();
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) values.push_back(sim.at(i, j));
  std::sort(values.begin(), values.end());
  double best_gap = 0.0, eps = values.front() - 0.1;
  for (std::size_t i = 1; i < values.size(); ++i) {
    double gap = values[i] - values[i - 1];
    if (gap > best_gap) {
      best_gap = gap;
      eps = 0.5 * (values[i] + values[i - 1]);
    }
  }
  if (best_gap < 1e-3) eps = values.front() - 0.1;  // keep everything instead
  return eps;
}

struct Battery {
  std::vector<GradCheckResult>& results;

  void check(const std::string& name, const std::function<Tensor(const Tensor&)>& fn,
             Tensor x, double step = 1e-5) {
    double err = grad_check(fn, std::move(x), step);
    auto it = std::find_if(results.begin(), results.end(),
                           [&](const GradCheckResult& r) { return r.name == name; });
    if (it == results.end()) {
      results.push_back({name, err, err < kThreshold});
    } else {
      it->max_rel_err = std::max(it->max_rel_err, err);
      it->pass = it->pass && err < kThreshold;
    }
  }
};

void run_one_seed(Battery& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);

  // primitives
  {
    Tensor w = Tensor::uniform({3, 4}, -1, 1, rng);
    b.check("matmul", [&](const Tensor& x) { return sum(matmul(w, x)); },
            Tensor::uniform({4, 2}, -1, 1, rng));
    Tensor v = Tensor::uniform({4}, -1, 1, rng);
    b.check("matmul_vec", [&](const Tensor& x) { return sum(matmul(x, v)); },
            Tensor::uniform({3, 4}, -1, 1, rng));
  }
  {
    Tensor other = Tensor::uniform({3, 3}, -1, 1, rng);
    b.check("add", [&](const Tensor& x) { return sum(hadamard(add(x, other), other)); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    b.check("sub", [&](const Tensor& x) { return frobenius_norm_sq(sub(x, other)); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    Tensor bias = Tensor::uniform({3}, -1, 1, rng);
    b.check("add_row_broadcast",
            [&](const Tensor& x) { return sum(hadamard(add(other, x), other)); }, bias);
    b.check("hadamard", [&](const Tensor& x) { return sum(hadamard(x, x)); },
            Tensor::uniform({2, 3}, -1, 1, rng));
    b.check("hadamard_row_broadcast",
            [&](const Tensor& x) { return frobenius_norm_sq(hadamard(other, x)); }, bias);
  }
  {
    Tensor s = Tensor::uniform({1}, 0.5, 1.5, rng);
    Tensor x0 = Tensor::uniform({4}, -1, 1, rng);
    b.check("scale", [&](const Tensor& x) { return sum(scale(x, 0.7)); },
            Tensor::uniform({4}, -1, 1, rng));
    b.check("scale_by_value",
            [&](const Tensor& x) { return sum(scale_by(x, s)); }, x0);
    b.check("scale_by_scaler",
            [&](const Tensor& x) { return sum(scale_by(x0, x)); }, s);
  }
  {
    Tensor right = Tensor::uniform({2, 2}, -1, 1, rng);
    b.check("concat_cols",
            [&](const Tensor& x) { return frobenius_norm_sq(concat(x, right, 1)); },
            Tensor::uniform({2, 3}, -1, 1, rng));
    b.check("concat_rows",
            [&](const Tensor& x) { return frobenius_norm_sq(concat(x, right, 0)); },
            Tensor::uniform({3, 2}, -1, 1, rng));
    b.check("slice",
            [&](const Tensor& x) { return sum(slice(x, 1, 1, 2)); },
            Tensor::uniform({3, 4}, -1, 1, rng));
    b.check("reshape",
            [&](const Tensor& x) { return sum(hadamard(reshape(x, {6}), reshape(x, {6}))); },
            Tensor::uniform({2, 3}, -1, 1, rng));
    b.check("stack_rows",
            [&](const Tensor& x) {
              std::vector<Tensor> rows = {reshape(slice(x, 0, 0, 1), {3}),
                                          reshape(slice(x, 0, 1, 1), {3})};
              return frobenius_norm_sq(stack_rows(rows));
            },
            Tensor::uniform({2, 3}, -1, 1, rng));
    b.check("transpose",
            [&](const Tensor& x) { return sum(matmul(transpose(x), right)); },
            Tensor::uniform({2, 3}, -1, 1, rng));
  }
  {
    b.check("sum_axis0", [&](const Tensor& x) { return sum(hadamard(sum(x, 0), sum(x, 0))); },
            Tensor::uniform({3, 2}, -1, 1, rng));
    b.check("sum_axis1", [&](const Tensor& x) { return sum(hadamard(sum(x, 1), sum(x, 1))); },
            Tensor::uniform({3, 2}, -1, 1, rng));
    b.check("mean", [&](const Tensor& x) { return mean(hadamard(x, x)); },
            Tensor::uniform({5}, -1, 1, rng));
    b.check("mean_axis", [&](const Tensor& x) { return sum(hadamard(mean(x, 0), mean(x, 0))); },
            Tensor::uniform({3, 2}, -1, 1, rng));
  }
  {
    b.check("sigmoid", [&](const Tensor& x) { return sum(sigmoid(x)); },
            Tensor::uniform({6}, -2, 2, rng));
    b.check("tanh", [&](const Tensor& x) { return sum(tanh(x)); },
            Tensor::uniform({6}, -2, 2, rng));
    b.check("relu", [&](const Tensor& x) { return sum(relu(x)); },
            away_from_zero({6}, rng));
    b.check("log", [&](const Tensor& x) { return sum(log(x)); }, positive({6}, rng));
    b.check("exp", [&](const Tensor& x) { return sum(exp(x)); },
            Tensor::uniform({6}, -1, 1, rng));
  }
  {
    Tensor pick = Tensor::uniform({4}, 0.1, 1.0, rng);
    b.check("softmax", [&](const Tensor& x) { return sum(hadamard(softmax(x, 0), pick)); },
            Tensor::uniform({4}, -1, 1, rng));
    Tensor pick2 = Tensor::uniform({3, 3}, 0.1, 1.0, rng);
    b.check("softmax_rows",
            [&](const Tensor& x) { return sum(hadamard(softmax(x, 1), pick2)); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    b.check("log_softmax_rows",
            [&](const Tensor& x) { return sum(hadamard(log_softmax(x, 1), pick2)); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    b.check("log_softmax_cols",
            [&](const Tensor& x) { return sum(hadamard(log_softmax(x, 0), pick2)); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    b.check("l2_normalize_vec",
            [&](const Tensor& x) { return sum(hadamard(l2_normalize(x, 0), pick)); },
            away_from_zero({4}, rng));
    b.check("l2_normalize_rows",
            [&](const Tensor& x) { return sum(hadamard(l2_normalize(x, 1), pick2)); },
            away_from_zero({3, 3}, rng));
    b.check("frobenius_norm_sq", [&](const Tensor& x) { return frobenius_norm_sq(x); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    b.check("trace", [&](const Tensor& x) { return trace(matmul(x, transpose(x))); },
            Tensor::uniform({3, 3}, -1, 1, rng));
    Tensor den = positive({3}, rng);
    b.check("rowwise_div",
            [&](const Tensor& x) { return frobenius_norm_sq(rowwise_div(x, den)); },
            Tensor::uniform({3, 2}, -1, 1, rng));
    Tensor num = Tensor::uniform({3, 2}, -1, 1, rng);
    b.check("rowwise_div_den",
            [&](const Tensor& x) { return frobenius_norm_sq(rowwise_div(num, x)); },
            positive({3}, rng));
  }

  // bilstm
  {
    std::mt19937_64 prng(splitmix64(seed) ^ 0xb17ULL);
    embed::BiLstmParams params = embed::BiLstmParams::init(3, 2, prng);
    Tensor input = Tensor::uniform({4, 3}, -1, 1, rng);
    b.check("bilstm_wrt_input",
            [&](const Tensor& x) { return mean(embed::bilstm_encode(x, params)); }, input);
    b.check("bilstm_wrt_w_input",
            [&](const Tensor& x) {
              embed::BiLstmParams p = params;
              p.forward.w_input = x;
              return mean(embed::bilstm_encode(input, p));
            },
            params.forward.w_input);
    auto check_param = [&](const char* name, Tensor embed::LstmParams::* field,
                           bool forward_dir) {
      Tensor start = forward_dir ? params.forward.*field : params.backward.*field;
      b.check(name,
              [&, field, forward_dir](const Tensor& x) {
                embed::BiLstmParams p = params;
                (forward_dir ? p.forward : p.backward).*field = x;
                return mean(embed::bilstm_encode(input, p));
              },
              start);
    };
    check_param("bilstm_wrt_fwd_w_hidden", &embed::LstmParams::w_hidden, true);
    check_param("bilstm_wrt_fwd_bias", &embed::LstmParams::bias, true);
    check_param("bilstm_wrt_bwd_w_input", &embed::LstmParams::w_input, false);
    check_param("bilstm_wrt_bwd_w_hidden", &embed::LstmParams::w_hidden, false);
    check_param("bilstm_wrt_bwd_bias", &embed::LstmParams::bias, false);
  }

  // dynamic graph similarity + threshold. The weight check runs with a
  // mixed retained/dropped threshold (placed in the widest similarity gap);
  // the feature check keeps every edge so no row's gradient is identically
  // zero, which would reduce the comparison to finite-difference noise.
  {
    Tensor h = away_from_zero({5, 4}, rng);
    Tensor weight = Tensor::uniform({4}, 0.8, 1.2, rng);
    Tensor probe = Tensor::uniform({5, 5}, 0.2, 1.0, rng);
    auto graph_probe = [&](const Tensor& features, const Tensor& w, double eps) {
      graph::GraphLearnerParams params;
      params.weight = w;
      params.epsilon = eps;
      return sum(hadamard(graph::learn_dynamic_graph(features, params).adjacency, probe));
    };
    double gap_eps = safe_epsilon(h, weight);
    b.check("dynamic_graph_wrt_weight",
            [&](const Tensor& x) { return graph_probe(h, x, gap_eps); }, weight);
    Tensor unit = l2_normalize(hadamard(h, weight), 1);
    double min_sim = 1.0;
    for (double v : matmul(unit, transpose(unit)).values()) min_sim = std::min(min_sim, v);
    double keep_all_eps = min_sim - 0.1;
    b.check("dynamic_graph_wrt_features",
            [&](const Tensor& x) { return graph_probe(x, weight, keep_all_eps); }, h);
  }

  // sage mean layer
  {
    std::mt19937_64 prng(splitmix64(seed) ^ 0x5a6eULL);
    gnn::SageConfig cfg;
    cfg.sample_size = 16;  // no sampling at this size: keeps fn deterministic
    cfg.aggregator = gnn::Aggregator::mean;
    cfg.activation = gnn::Activation::relu;
    gnn::SageLayerParams params = gnn::SageLayerParams::init(3, 3, cfg.aggregator, prng);
    graph::TextGraph g;
    g.n = 4;
    Tensor adj = positive({4, 4}, rng);
    for (std::size_t i = 0; i < 4; ++i) adj.mutable_values()[i * 4 + i] = 0.0;
    g.adjacency = adj;
    Tensor h = away_from_zero({4, 3}, rng);
    auto run = [&](const gnn::SageLayerParams& p, const Tensor& feats) {
      std::mt19937_64 layer_rng(7);
      return mean(gnn::sage_layer(g, feats, p, cfg, layer_rng));
    };
    b.check("sage_mean_wrt_weight",
            [&](const Tensor& x) {
              gnn::SageLayerParams p = params;
              p.weight = x;
              return run(p, h);
            },
            params.weight);
    b.check("sage_mean_wrt_features",
            [&](const Tensor& x) { return run(params, x); }, h);
  }

  // ggnn layer on a 3-node directed path
  {
    std::mt19937_64 prng(splitmix64(seed) ^ 0x66e2ULL);
    gnn::GgnnLayerParams params = gnn::GgnnLayerParams::init(3, prng);
    graph::TextGraph g;
    g.n = 3;
    g.directed = true;
    g.adjacency = Tensor::matrix(3, 3, {0, 1, 0, 0, 0, 1, 0, 0, 0});
    Tensor h = Tensor::uniform({3, 3}, -1, 1, rng);
    b.check("ggnn_wrt_features",
            [&](const Tensor& x) { return mean(gnn::ggnn_layer(g, x, params)); }, h);
    b.check("ggnn_wrt_w_in",
            [&](const Tensor& x) {
              gnn::GgnnLayerParams p = params;
              p.w_in = x;
              return mean(gnn::ggnn_layer(g, h, p));
            },
            params.w_in);
    b.check("ggnn_wrt_u_cand",
            [&](const Tensor& x) {
              gnn::GgnnLayerParams p = params;
              p.u_cand = x;
              return mean(gnn::ggnn_layer(g, h, p));
            },
            params.u_cand);
    b.check("ggnn_wrt_w_update",
            [&](const Tensor& x) {
              gnn::GgnnLayerParams p = params;
              p.w_update = x;
              return mean(gnn::ggnn_layer(g, h, p));
            },
            params.w_update);
  }

  // mlp
  {
    std::mt19937_64 prng(splitmix64(seed) ^ 0x313ULL);
    heads::MlpParams params = heads::MlpParams::init(4, 3, prng);
    Tensor r = away_from_zero({4}, rng);
    Tensor pick = Tensor::uniform({2}, 0.1, 1.0, rng);
    auto score = [&](const heads::MlpParams& p, const Tensor& in) {
      return sum(hadamard(heads::mlp_classify(in, p), pick));
    };
    b.check("mlp_wrt_input", [&](const Tensor& x) { return score(params, x); }, r);
    b.check("mlp_wrt_w1",
            [&](const Tensor& x) {
              heads::MlpParams p = params;
              p.w1 = x;
              return score(p, r);
            },
            params.w1);
    b.check("mlp_wrt_w2",
            [&](const Tensor& x) {
              heads::MlpParams p = params;
              p.w2 = x;
              return score(p, r);
            },
            params.w2);
  }

  // cross network
  {
    std::mt19937_64 prng(splitmix64(seed) ^ 0xc505ULL);
    heads::CrossNetParams params = heads::CrossNetParams::init(4, 2, prng);
    Tensor x0 = Tensor::uniform({4}, -1, 1, rng);
    Tensor pick = Tensor::uniform({4}, 0.1, 1.0, rng);
    auto score = [&](const heads::CrossNetParams& p, const Tensor& in) {
      return sum(hadamard(heads::cross_network(in, p), pick));
    };
    b.check("cross_wrt_input", [&](const Tensor& x) { return score(params, x); }, x0);
    b.check("cross_wrt_weight",
            [&](const Tensor& x) {
              heads::CrossNetParams p = params;
              p.weights[0] = x;
              return score(p, x0);
            },
            params.weights[0]);
    b.check("cross_wrt_bias",
            [&](const Tensor& x) {
              heads::CrossNetParams p = params;
              p.biases[1] = x;
              return score(p, x0);
            },
            params.biases[1]);
  }

  // losses
  {
    b.check("cross_entropy",
            [&](const Tensor& x) { return losses::cross_entropy(x, 1); },
            Tensor::uniform({2}, -1, 1, rng));
    std::vector<int> labels = {0, 1, 1};
    b.check("cross_entropy_rows",
            [&](const Tensor& x) { return losses::cross_entropy_rows(x, labels); },
            Tensor::uniform({3, 2}, -1, 1, rng));
  }
  {
    losses::RegWeights weights;
    Tensor adjacency = positive({4, 4}, rng);
    Tensor h = Tensor::uniform({4, 3}, -1, 1, rng);
    b.check("graph_reg_wrt_features",
            [&](const Tensor& x) {
              return losses::graph_regularization(x, adjacency, weights);
            },
            h);
    b.check("graph_reg_wrt_adjacency",
            [&](const Tensor& x) {
              return losses::graph_regularization(h, x, weights);
            },
            adjacency);
    b.check("total_loss_dynamic",
            [&](const Tensor& x) {
              Tensor l_pred = losses::cross_entropy(slice(x, 0, 0, 2), 0);
              Tensor l_graph = frobenius_norm_sq(slice(x, 0, 2, 2));
              return losses::total_loss(l_pred, l_graph, losses::GraphKind::dynamic);
            },
            Tensor::uniform({4}, -1, 1, rng));
  }
  {
    Tensor origin = away_from_zero({3, 4}, rng);
    Tensor tts = away_from_zero({3, 4}, rng);
    auto con = [&](const Tensor& o, const Tensor& t) {
      losses::ContrastiveBatch batch;
      batch.origin_feats = o;
      batch.tts_feats = t;
      batch.temperature = 0.3;
      return losses::contrastive_loss(batch);
    };
    b.check("contrastive_wrt_origin",
            [&](const Tensor& x) { return con(x, tts); }, origin);
    b.check("contrastive_wrt_tts",
            [&](const Tensor& x) { return con(origin, x); }, tts);
    losses::MultitaskWeights mw{0.7, 1.3, 0.5};
    b.check("multitask",
            [&](const Tensor& x) {
              return losses::multitask_loss(slice(x, 0, 0, 1), slice(x, 0, 1, 1),
                                            slice(x, 0, 2, 1), mw);
            },
            Tensor::uniform({3}, -1, 1, rng));
  }
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_battery(std::size_t seeds) {
  std::vector<GradCheckResult> results;
  Battery battery{results};
  for (std::size_t s = 0; s < seeds; ++s) {
    run_one_seed(battery, 1000 + s);
  }
  return results;
}

bool print_gradcheck_battery(std::ostream& os, std::size_t seeds) {
  bool all = true;
  for (const GradCheckResult& r : run_gradcheck_battery(seeds)) {
    os << (r.pass ? "PASS" : "FAIL") << "  " << r.name
       << "  max_rel_err=" << r.max_rel_err << "\n";
    all = all && r.pass;
  }
  return all;
}

}  // namespace adgnn::harness
