#include "adgnn/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adgnn/error.hpp"

namespace adgnn::embed {

namespace {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden,
                            std::mt19937_64& rng) {
  LstmParams p;
  p.hidden = hidden;
  double bw = xavier_bound(input_dim, hidden);
  double bu = xavier_bound(hidden, hidden);
  p.w_input = Tensor::uniform({4 * hidden, input_dim}, -bw, bw, rng, true);
  p.w_hidden = Tensor::uniform({4 * hidden, hidden}, -bu, bu, rng, true);
  p.bias = Tensor::zeros({4 * hidden}, true);
  return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
  LstmParams p;
  p.hidden = hidden;
  p.w_input = Tensor::zeros({4 * hidden, input_dim}, true);
  p.w_hidden = Tensor::zeros({4 * hidden, hidden}, true);
  p.bias = Tensor::zeros({4 * hidden}, true);
  return p;
}

BiLstmParams BiLstmParams::init(std::size_t input_dim, std::size_t hidden_per_dir,
                                std::mt19937_64& rng) {
  BiLstmParams p;
  p.forward = LstmParams::init(input_dim, hidden_per_dir, rng);
  p.backward = LstmParams::init(input_dim, hidden_per_dir, rng);
  return p;
}

BiLstmParams BiLstmParams::zeros(std::size_t input_dim, std::size_t hidden_per_dir) {
  BiLstmParams p;
  p.forward = LstmParams::zeros(input_dim, hidden_per_dir);
  p.backward = LstmParams::zeros(input_dim, hidden_per_dir);
  return p;
}

WordVectorTable load_word_vectors(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  WordVectorTable table;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vec;
    double v;
    while (ls >> v) {
      if (!std::isfinite(v)) {
        throw_error(ErrorKind::NonFinite, "non-finite word vector for " + token);
      }
      vec.push_back(v);
    }
    if (vec.empty()) throw_error(ErrorKind::MalformedRow, "no values for " + token);
    if (table.dim == 0) {
      table.dim = vec.size();
    } else if (vec.size() != table.dim) {
      throw_error(ErrorKind::DimensionMismatch,
                  "vector dim " + std::to_string(vec.size()) + " for " + token +
                      ", expected " + std::to_string(table.dim));
    }
    if (!table.vectors.emplace(token, std::move(vec)).second) {
      throw_error(ErrorKind::DuplicateToken, token);
    }
  }
  return table;
}

TokenEmbeddingTable load_token_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  TokenEmbeddingTable table;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw_error(ErrorKind::MalformedRow, "expected sample_id<TAB>row<TAB>values");
    }
    std::string id = line.substr(0, tab1);
    std::size_t row_index;
    try {
      row_index = std::stoul(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      throw_error(ErrorKind::MalformedRow, "non-numeric row index for " + id);
    }
    std::vector<double> vec;
    std::istringstream vs(line.substr(tab2 + 1));
    double v;
    while (vs >> v) {
      if (!std::isfinite(v)) {
        throw_error(ErrorKind::NonFinite, "non-finite embedding for " + id);
      }
      vec.push_back(v);
    }
    if (vec.empty()) throw_error(ErrorKind::MalformedRow, "no values for " + id);
    if (table.dim == 0) {
      table.dim = vec.size();
    } else if (vec.size() != table.dim) {
      throw_error(ErrorKind::DimensionMismatch, "embedding dim mismatch for " + id);
    }
    auto& rows = table.rows[id];
    if (rows.size() != row_index) {
      throw_error(ErrorKind::MalformedRow,
                  "row indices for " + id + " must be dense from 0");
    }
    rows.push_back(std::move(vec));
  }
  return table;
}

Tensor lookup(const std::vector<std::string>& tokens, const WordVectorTable& table) {
  std::size_t n = tokens.size();
  std::vector<double> values(n * table.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = table.vectors.find(tokens[i]);
    if (it == table.vectors.end()) continue;  // OOV stays a zero row
    std::copy(it->second.begin(), it->second.end(), values.begin() + i * table.dim);
  }
  return Tensor::matrix(n, table.dim, std::move(values));
}

Tensor concat_external(const Tensor& h, const Tensor& ext) {
  if (h.rank() != 2 || ext.rank() != 2 || h.rows() != ext.rows()) {
    throw_error(ErrorKind::RowCountMismatch,
                "external embedding rows " +
                    std::to_string(ext.rank() == 2 ? ext.rows() : 0) +
                    " do not match token count " +
                    std::to_string(h.rank() == 2 ? h.rows() : 0));
  }
  return concat(h, ext, 1);
}

Tensor run_lstm(const Tensor& x, const LstmParams& params) {
  if (x.rank() != 2 || x.cols() != params.w_input.cols()) {
    throw_error(ErrorKind::ShapeMismatch, "lstm input dim mismatch");
  }
  std::size_t n = x.rows();
  std::size_t h = params.hidden;
  Tensor h_prev = Tensor::zeros({h});
  Tensor c_prev = Tensor::zeros({h});
  std::vector<Tensor> outputs;
  outputs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Tensor x_t = reshape(slice(x, 0, t, 1), {x.cols()});
    // preactivations for the four gates, stacked (i, f, g, o)
    Tensor pre = add(add(matmul(params.w_input, x_t),
                         matmul(params.w_hidden, h_prev)),
                     params.bias);
    Tensor i_g = sigmoid(slice(pre, 0, 0, h));
    Tensor f_g = sigmoid(slice(pre, 0, h, h));
    Tensor g_g = tanh(slice(pre, 0, 2 * h, h));
    Tensor o_g = sigmoid(slice(pre, 0, 3 * h, h));
    Tensor c_t = add(hadamard(f_g, c_prev), hadamard(i_g, g_g));
    Tensor h_t = hadamard(o_g, tanh(c_t));
    outputs.push_back(h_t);
    h_prev = h_t;
    c_prev = c_t;
  }
  if (outputs.empty()) return Tensor::zeros({0, h});
  return stack_rows(outputs);
}

namespace {

Tensor reverse_rows(const Tensor& x) {
  std::size_t n = x.rows(), d = x.cols();
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows.push_back(reshape(slice(x, 0, n - 1 - r, 1), {d}));
  }
  return stack_rows(rows);
}

}  // namespace

Tensor bilstm_encode(const Tensor& h, const BiLstmParams& params) {
  if (h.rank() != 2 || h.rows() == 0) {
    throw_error(ErrorKind::ShapeMismatch, "bilstm needs a non-empty (n, d) input");
  }
  Tensor fwd = run_lstm(h, params.forward);
  // backward direction = forward pass over the reversed sequence, un-reversed
  Tensor bwd = reverse_rows(run_lstm(reverse_rows(h), params.backward));
  return concat(fwd, bwd, 1);
}

}  // namespace adgnn::embed
