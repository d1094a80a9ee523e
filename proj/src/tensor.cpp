#include "adgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adgnn/rng.hpp"

namespace adgnn {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw_error(ErrorKind::NonFinite,
                  std::string(op) + " produced a non-finite value");
    }
  }
}

// Builds the output tensor, validates finiteness, and records the node when
// recording is active. `backward` receives the node so it can read the
// output gradient and accumulate into the inputs.
Tensor make_op(const char* name, std::vector<Tensor> inputs,
               std::vector<std::size_t> out_shape, std::vector<double> out_values,
               std::function<void(Tape::Node&)> backward) {
  check_finite(out_values, name);
  bool needs_grad = false;
  for (const Tensor& in : inputs) {
    if (in.requires_grad()) needs_grad = true;
  }
  Tape* tape = Tape::active();
  Tensor out(std::move(out_shape), std::move(out_values),
             needs_grad && tape != nullptr);
  if (needs_grad && tape != nullptr) {
    Tape::Node node;
    node.op = name;
    node.inputs.reserve(inputs.size());
    for (const Tensor& in : inputs) node.inputs.push_back(in.impl_ptr());
    node.output = out.impl_ptr();
    node.backward = std::move(backward);
    tape->record(std::move(node));
  }
  return out;
}

bool wants_grad(const Tape::Node& node, std::size_t input_index) {
  return node.inputs[input_index]->requires_grad;
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values,
               bool requires_grad) {
  if (shape.empty() || shape.size() > 2) {
    throw_error(ErrorKind::ShapeMismatch,
                "tensors are rank 1 or 2, got rank " + std::to_string(shape.size()));
  }
  if (shape_product(shape) != values.size()) {
    throw_error(ErrorKind::ShapeMismatch,
                "shape " + shape_str(shape) + " does not match " +
                    std::to_string(values.size()) + " values");
  }
  check_finite(values, "tensor construction");
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor({1}, {v}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> v, bool requires_grad) {
  std::size_t n = v.size();
  return Tensor({n}, std::move(v), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(v), requires_grad);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> v(shape_product(shape), 0.0);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  std::vector<double> v(shape_product(shape), value);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double lo, double hi,
                       std::mt19937_64& rng, bool requires_grad) {
  std::vector<double> v(shape_product(shape));
  for (double& x : v) x = rng_uniform(rng, lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::eye(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return Tensor({n, n}, std::move(v), false);
}

const std::vector<std::size_t>& Tensor::shape() const {
  if (!impl_) throw_error(ErrorKind::ShapeMismatch, "use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::size() const { return impl_ ? impl_->values.size() : 0; }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw_error(ErrorKind::ShapeMismatch, "rows() needs rank 2");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw_error(ErrorKind::ShapeMismatch, "cols() needs rank 2");
  return shape()[1];
}

const std::vector<double>& Tensor::values() const {
  if (!impl_) throw_error(ErrorKind::ShapeMismatch, "use of undefined tensor");
  return impl_->values;
}

std::vector<double>& Tensor::mutable_values() {
  if (!impl_) throw_error(ErrorKind::ShapeMismatch, "use of undefined tensor");
  return impl_->values;
}

double Tensor::item() const {
  if (size() != 1) {
    throw_error(ErrorKind::ShapeMismatch,
                "item() on tensor of size " + std::to_string(size()));
  }
  return impl_->values[0];
}

double Tensor::at(std::size_t i) const { return values().at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return values().at(r * cols() + c);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool rg) {
  if (!impl_) throw_error(ErrorKind::ShapeMismatch, "use of undefined tensor");
  impl_->requires_grad = rg;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) {
    throw_error(ErrorKind::MissingGrad, "gradient has not been populated");
  }
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

// ---- Tape ------------------------------------------------------------------

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw_error(ErrorKind::NonScalarLoss,
                "backward needs a scalar loss, got size " +
                    std::to_string(loss.size()));
  }
  loss.impl()->ensure_grad();
  loss.impl()->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // does not feed the loss
    it->backward(*it);
  }
}

// ---- op helpers ------------------------------------------------------------

namespace {

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw_error(kind, msg);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Group iteration for axis ops on rank-1/2 tensors: calls fn(base, stride,
// len) for each slice along `axis` of a rank-2 tensor (axis=1 -> rows,
// axis=0 -> columns); rank-1 tensors are a single group.
template <typename Fn>
void for_each_group(const std::vector<std::size_t>& shape, std::size_t axis, Fn fn) {
  if (shape.size() == 1) {
    fn(std::size_t{0}, std::size_t{1}, shape[0]);
    return;
  }
  std::size_t n = shape[0], d = shape[1];
  if (axis == 1) {
    for (std::size_t r = 0; r < n; ++r) fn(r * d, std::size_t{1}, d);
  } else {
    for (std::size_t c = 0; c < d; ++c) fn(c, d, n);
  }
}

}  // namespace

// ---- primitives ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.defined() && b.defined(), ErrorKind::ShapeMismatch, "matmul on undefined tensor");
  require(a.rank() == 2, ErrorKind::ShapeMismatch, "matmul lhs must be rank 2");
  std::size_t m = a.rows(), k = a.cols();
  bool vec = b.rank() == 1;
  std::size_t k2 = vec ? b.shape()[0] : b.rows();
  std::size_t n = vec ? 1 : b.cols();
  require(k == k2, ErrorKind::ShapeMismatch,
          "matmul inner dims " + std::to_string(k) + " vs " + std::to_string(k2));

  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* crow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  std::vector<std::size_t> out_shape =
      vec ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n};

  return make_op("matmul", {a, b}, std::move(out_shape), std::move(out),
                 [m, k, n](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   const auto& av = node.inputs[0]->values;
                   const auto& bv = node.inputs[1]->values;
                   if (wants_grad(node, 0)) {
                     auto& ai = *node.inputs[0];
                     ai.ensure_grad();
                     // dA = G * B^T
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         double s = 0.0;
                         for (std::size_t j = 0; j < n; ++j)
                           s += g[i * n + j] * bv[p * n + j];
                         ai.grad[i * k + p] += s;
                       }
                   }
                   if (wants_grad(node, 1)) {
                     auto& bi = *node.inputs[1];
                     bi.ensure_grad();
                     // dB = A^T * G
                     for (std::size_t p = 0; p < k; ++p)
                       for (std::size_t i = 0; i < m; ++i) {
                         double aip = av[i * k + p];
                         if (aip == 0.0) continue;
                         for (std::size_t j = 0; j < n; ++j)
                           bi.grad[p * n + j] += aip * g[i * n + j];
                       }
                   }
                 });
}

namespace {

enum class Broadcast { None, Rows };

Broadcast elementwise_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (a.rank() == 2 && b.rank() == 1 && a.cols() == b.shape()[0]) {
    return Broadcast::Rows;
  }
  throw_error(ErrorKind::ShapeMismatch,
              std::string(op) + " shapes " + shape_str(a.shape()) + " vs " +
                  shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Broadcast mode = elementwise_mode(a, b, "add");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  if (mode == Broadcast::None) {
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  } else {
    std::size_t d = b.shape()[0];
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i % d];
  }
  return make_op("add", {a, b}, a.shape(), std::move(out),
                 [mode](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   if (wants_grad(node, 0)) {
                     auto& ai = *node.inputs[0];
                     ai.ensure_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) ai.grad[i] += g[i];
                   }
                   if (wants_grad(node, 1)) {
                     auto& bi = *node.inputs[1];
                     bi.ensure_grad();
                     if (mode == Broadcast::None) {
                       for (std::size_t i = 0; i < g.size(); ++i) bi.grad[i] += g[i];
                     } else {
                       std::size_t d = bi.values.size();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         bi.grad[i % d] += g[i];
                     }
                   }
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.defined() && b.defined() && a.shape() == b.shape(),
          ErrorKind::ShapeMismatch, "sub needs equal shapes");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return make_op("sub", {a, b}, a.shape(), std::move(out),
                 [](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   if (wants_grad(node, 0)) {
                     auto& ai = *node.inputs[0];
                     ai.ensure_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) ai.grad[i] += g[i];
                   }
                   if (wants_grad(node, 1)) {
                     auto& bi = *node.inputs[1];
                     bi.ensure_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) bi.grad[i] -= g[i];
                   }
                 });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  Broadcast mode = elementwise_mode(a, b, "hadamard");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  if (mode == Broadcast::None) {
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  } else {
    std::size_t d = b.shape()[0];
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i % d];
  }
  return make_op("hadamard", {a, b}, a.shape(), std::move(out),
                 [mode](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   const auto& av = node.inputs[0]->values;
                   const auto& bv = node.inputs[1]->values;
                   std::size_t d = bv.size();
                   if (wants_grad(node, 0)) {
                     auto& ai = *node.inputs[0];
                     ai.ensure_grad();
                     if (mode == Broadcast::None) {
                       for (std::size_t i = 0; i < g.size(); ++i)
                         ai.grad[i] += g[i] * bv[i];
                     } else {
                       for (std::size_t i = 0; i < g.size(); ++i)
                         ai.grad[i] += g[i] * bv[i % d];
                     }
                   }
                   if (wants_grad(node, 1)) {
                     auto& bi = *node.inputs[1];
                     bi.ensure_grad();
                     if (mode == Broadcast::None) {
                       for (std::size_t i = 0; i < g.size(); ++i)
                         bi.grad[i] += g[i] * av[i];
                     } else {
                       for (std::size_t i = 0; i < g.size(); ++i)
                         bi.grad[i % d] += g[i] * av[i];
                     }
                   }
                 });
}

Tensor scale(const Tensor& a, double c) {
  require(std::isfinite(c), ErrorKind::NonFinite, "scale by non-finite constant");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return make_op("scale", {a}, a.shape(), std::move(out),
                 [c](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t i = 0; i < g.size(); ++i) ai.grad[i] += g[i] * c;
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  require(std::isfinite(c), ErrorKind::NonFinite, "add of non-finite constant");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  return make_op("add_scalar", {a}, a.shape(), std::move(out),
                 [](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t i = 0; i < g.size(); ++i) ai.grad[i] += g[i];
                 });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
  require(s.size() == 1, ErrorKind::ShapeMismatch, "scale_by needs a size-1 scaler");
  double c = s.values()[0];
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * c;
  return make_op("scale_by", {x, s}, x.shape(), std::move(out),
                 [](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   const auto& xv = node.inputs[0]->values;
                   double c = node.inputs[1]->values[0];
                   if (wants_grad(node, 0)) {
                     auto& xi = *node.inputs[0];
                     xi.ensure_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) xi.grad[i] += g[i] * c;
                   }
                   if (wants_grad(node, 1)) {
                     auto& si = *node.inputs[1];
                     si.ensure_grad();
                     double acc = 0.0;
                     for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
                     si.grad[0] += acc;
                   }
                 });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  require(a.defined() && b.defined(), ErrorKind::ShapeMismatch, "concat on undefined tensor");
  require(a.rank() == b.rank(), ErrorKind::ShapeMismatch, "concat rank mismatch");
  std::vector<std::size_t> out_shape;
  std::vector<double> out;
  if (a.rank() == 1) {
    require(axis == 0, ErrorKind::ShapeMismatch, "concat axis out of range");
    out = a.values();
    out.insert(out.end(), b.values().begin(), b.values().end());
    out_shape = {a.size() + b.size()};
  } else if (axis == 0) {
    require(a.cols() == b.cols(), ErrorKind::ShapeMismatch, "concat column mismatch");
    out = a.values();
    out.insert(out.end(), b.values().begin(), b.values().end());
    out_shape = {a.rows() + b.rows(), a.cols()};
  } else {
    require(axis == 1, ErrorKind::ShapeMismatch, "concat axis out of range");
    require(a.rows() == b.rows(), ErrorKind::ShapeMismatch, "concat row mismatch");
    std::size_t n = a.rows(), da = a.cols(), db = b.cols();
    out.resize(n * (da + db));
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(&a.values()[r * da], da, &out[r * (da + db)]);
      std::copy_n(&b.values()[r * db], db, &out[r * (da + db) + da]);
    }
    out_shape = {n, da + db};
  }
  std::size_t a_size = a.size();
  std::size_t a_cols = a.rank() == 2 ? a.cols() : 0;
  std::size_t b_cols = b.rank() == 2 ? b.cols() : 0;
  return make_op(
      "concat", {a, b}, std::move(out_shape), std::move(out),
      [axis, a_size, a_cols, b_cols](Tape::Node& node) {
        const auto& g = node.output->grad;
        auto scatter = [&](std::size_t which) {
          auto& t = *node.inputs[which];
          t.ensure_grad();
          if (axis == 0 || node.inputs[0]->shape.size() == 1) {
            std::size_t offset = which == 0 ? 0 : a_size;
            for (std::size_t i = 0; i < t.values.size(); ++i)
              t.grad[i] += g[offset + i];
          } else {
            std::size_t dt = which == 0 ? a_cols : b_cols;
            std::size_t off = which == 0 ? 0 : a_cols;
            std::size_t dout = a_cols + b_cols;
            std::size_t rows = t.values.size() / dt;
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < dt; ++c)
                t.grad[r * dt + c] += g[r * dout + off + c];
          }
        };
        if (wants_grad(node, 0)) scatter(0);
        if (wants_grad(node, 1)) scatter(1);
      });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
  require(a.defined(), ErrorKind::ShapeMismatch, "slice on undefined tensor");
  std::vector<std::size_t> out_shape;
  std::vector<double> out;
  if (a.rank() == 1) {
    require(axis == 0 && start + len <= a.size(), ErrorKind::ShapeMismatch,
            "slice out of range");
    out.assign(a.values().begin() + start, a.values().begin() + start + len);
    out_shape = {len};
  } else if (axis == 0) {
    require(start + len <= a.rows(), ErrorKind::ShapeMismatch, "slice out of range");
    std::size_t d = a.cols();
    out.assign(a.values().begin() + start * d, a.values().begin() + (start + len) * d);
    out_shape = {len, d};
  } else {
    require(axis == 1 && start + len <= a.cols(), ErrorKind::ShapeMismatch,
            "slice out of range");
    std::size_t n = a.rows(), d = a.cols();
    out.resize(n * len);
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(&a.values()[r * d + start], len, &out[r * len]);
    out_shape = {n, len};
  }
  std::size_t a_cols = a.rank() == 2 ? a.cols() : 0;
  return make_op("slice", {a}, std::move(out_shape), std::move(out),
                 [axis, start, len, a_cols](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   if (ai.shape.size() == 1) {
                     for (std::size_t i = 0; i < len; ++i) ai.grad[start + i] += g[i];
                   } else if (axis == 0) {
                     for (std::size_t i = 0; i < g.size(); ++i)
                       ai.grad[start * a_cols + i] += g[i];
                   } else {
                     std::size_t rows = ai.values.size() / a_cols;
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < len; ++c)
                         ai.grad[r * a_cols + start + c] += g[r * len + c];
                   }
                 });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  require(!rows.empty(), ErrorKind::ShapeMismatch, "stack_rows of nothing");
  std::size_t d = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const Tensor& r : rows) {
    require(r.rank() == 1 && r.size() == d, ErrorKind::ShapeMismatch,
            "stack_rows needs equal-length vectors");
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return make_op("stack_rows", rows, {rows.size(), d}, std::move(out),
                 [d](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   for (std::size_t r = 0; r < node.inputs.size(); ++r) {
                     if (!node.inputs[r]->requires_grad) continue;
                     auto& t = *node.inputs[r];
                     t.ensure_grad();
                     for (std::size_t c = 0; c < d; ++c)
                       t.grad[c] += g[r * d + c];
                   }
                 });
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  require(a.defined() && shape_product(shape) == a.size(), ErrorKind::ShapeMismatch,
          "reshape must preserve size");
  return make_op("reshape", {a}, std::move(shape), a.values(),
                 [](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t i = 0; i < g.size(); ++i) ai.grad[i] += g[i];
                 });
}

Tensor transpose(const Tensor& a) {
  require(a.defined() && a.rank() == 2, ErrorKind::ShapeMismatch,
          "transpose needs rank 2");
  std::size_t n = a.rows(), d = a.cols();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[c * n + r] = a.values()[r * d + c];
  return make_op("transpose", {a}, {d, n}, std::move(out),
                 [n, d](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t r = 0; r < n; ++r)
                     for (std::size_t c = 0; c < d; ++c)
                       ai.grad[r * d + c] += g[c * n + r];
                 });
}

Tensor sum(const Tensor& a) {
  const auto& av = a.values();
  double s = std::accumulate(av.begin(), av.end(), 0.0);
  return make_op("sum", {a}, {1}, {s}, [](Tape::Node& node) {
    if (!wants_grad(node, 0)) return;
    double g = node.output->grad[0];
    auto& ai = *node.inputs[0];
    ai.ensure_grad();
    for (double& v : ai.grad) v += g;
  });
}

Tensor sum(const Tensor& a, std::size_t axis) {
  require(a.defined() && a.rank() == 2 && axis <= 1, ErrorKind::ShapeMismatch,
          "axis sum needs rank 2");
  std::size_t n = a.rows(), d = a.cols();
  std::vector<double> out(axis == 1 ? n : d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c)
      out[axis == 1 ? r : c] += a.values()[r * d + c];
  std::vector<std::size_t> out_shape{out.size()};
  return make_op("sum_axis", {a}, std::move(out_shape), std::move(out),
                 [axis, n, d](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t r = 0; r < n; ++r)
                     for (std::size_t c = 0; c < d; ++c)
                       ai.grad[r * d + c] += g[axis == 1 ? r : c];
                 });
}

Tensor mean(const Tensor& a) {
  require(a.size() > 0, ErrorKind::ShapeMismatch, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor mean(const Tensor& a, std::size_t axis) {
  std::size_t len = axis == 1 ? a.cols() : a.rows();
  require(len > 0, ErrorKind::ShapeMismatch, "mean over empty axis");
  return scale(sum(a, axis), 1.0 / static_cast<double>(len));
}

namespace {

Tensor unary_elementwise(const char* name, const Tensor& a,
                         double (*fwd)(double),
                         // dy/dx expressed from (x, y)
                         double (*deriv)(double, double)) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return make_op(name, {a}, a.shape(), std::move(out),
                 [deriv](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   const auto& y = node.output->values;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t i = 0; i < g.size(); ++i)
                     ai.grad[i] += g[i] * deriv(ai.values[i], y[i]);
                 });
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary_elementwise(
      "sigmoid", a, +[](double x) { return stable_sigmoid(x); },
      +[](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary_elementwise(
      "tanh", a, +[](double x) { return std::tanh(x); },
      +[](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_elementwise(
      "relu", a, +[](double x) { return x > 0.0 ? x : 0.0; },
      +[](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor log(const Tensor& a) {
  return unary_elementwise(
      "log", a, +[](double x) { return std::log(x); },
      +[](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary_elementwise(
      "exp", a, +[](double x) { return std::exp(x); },
      +[](double, double y) { return y; });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  require(a.defined(), ErrorKind::ShapeMismatch, "softmax on undefined tensor");
  require(a.rank() == 1 || axis <= 1, ErrorKind::ShapeMismatch, "softmax axis");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for_each_group(a.shape(), axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
    double mx = av[base];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, av[base + i * stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double e = std::exp(av[base + i * stride] - mx);
      out[base + i * stride] = e;
      z += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[base + i * stride] /= z;
  });
  auto shape = a.shape();
  return make_op("softmax", {a}, a.shape(), std::move(out),
                 [shape, axis](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   const auto& y = node.output->values;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for_each_group(shape, axis, [&](std::size_t base, std::size_t stride,
                                                   std::size_t len) {
                     double dot = 0.0;
                     for (std::size_t i = 0; i < len; ++i) {
                       std::size_t ix = base + i * stride;
                       dot += g[ix] * y[ix];
                     }
                     for (std::size_t i = 0; i < len; ++i) {
                       std::size_t ix = base + i * stride;
                       ai.grad[ix] += y[ix] * (g[ix] - dot);
                     }
                   });
                 });
}

Tensor log_softmax(const Tensor& a, std::size_t axis) {
  require(a.defined(), ErrorKind::ShapeMismatch, "log_softmax on undefined tensor");
  require(a.rank() == 1 || axis <= 1, ErrorKind::ShapeMismatch, "log_softmax axis");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for_each_group(a.shape(), axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
    double mx = av[base];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, av[base + i * stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) z += std::exp(av[base + i * stride] - mx);
    double lz = mx + std::log(z);
    for (std::size_t i = 0; i < len; ++i)
      out[base + i * stride] = av[base + i * stride] - lz;
  });
  auto shape = a.shape();
  return make_op("log_softmax", {a}, a.shape(), std::move(out),
                 [shape, axis](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   const auto& y = node.output->values;  // log probabilities
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for_each_group(shape, axis, [&](std::size_t base, std::size_t stride,
                                                   std::size_t len) {
                     double gsum = 0.0;
                     for (std::size_t i = 0; i < len; ++i) gsum += g[base + i * stride];
                     for (std::size_t i = 0; i < len; ++i) {
                       std::size_t ix = base + i * stride;
                       ai.grad[ix] += g[ix] - std::exp(y[ix]) * gsum;
                     }
                   });
                 });
}

Tensor l2_normalize(const Tensor& a, std::size_t axis) {
  require(a.defined(), ErrorKind::ShapeMismatch, "l2_normalize on undefined tensor");
  require(a.rank() == 1 || axis <= 1, ErrorKind::ShapeMismatch, "l2_normalize axis");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  std::vector<double> norms;
  for_each_group(a.shape(), axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
    double sq = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double v = av[base + i * stride];
      sq += v * v;
    }
    double norm = std::sqrt(sq);
    if (norm == 0.0) {
      throw_error(ErrorKind::ZeroNormRow, "l2_normalize of a zero vector");
    }
    norms.push_back(norm);
    for (std::size_t i = 0; i < len; ++i)
      out[base + i * stride] = av[base + i * stride] / norm;
  });
  auto shape = a.shape();
  return make_op("l2_normalize", {a}, a.shape(), std::move(out),
                 [shape, axis, norms](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   const auto& y = node.output->values;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   std::size_t group = 0;
                   for_each_group(shape, axis, [&](std::size_t base, std::size_t stride,
                                                   std::size_t len) {
                     double norm = norms[group++];
                     double dot = 0.0;
                     for (std::size_t i = 0; i < len; ++i) {
                       std::size_t ix = base + i * stride;
                       dot += g[ix] * y[ix];
                     }
                     for (std::size_t i = 0; i < len; ++i) {
                       std::size_t ix = base + i * stride;
                       ai.grad[ix] += (g[ix] - dot * y[ix]) / norm;
                     }
                   });
                 });
}

Tensor frobenius_norm_sq(const Tensor& a) {
  const auto& av = a.values();
  double s = 0.0;
  for (double v : av) s += v * v;
  return make_op("frobenius_norm_sq", {a}, {1}, {s}, [](Tape::Node& node) {
    if (!wants_grad(node, 0)) return;
    double g = node.output->grad[0];
    auto& ai = *node.inputs[0];
    ai.ensure_grad();
    for (std::size_t i = 0; i < ai.values.size(); ++i)
      ai.grad[i] += 2.0 * ai.values[i] * g;
  });
}

Tensor trace(const Tensor& a) {
  require(a.defined() && a.rank() == 2 && a.rows() == a.cols(),
          ErrorKind::ShapeMismatch, "trace needs a square matrix");
  std::size_t n = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a.values()[i * n + i];
  return make_op("trace", {a}, {1}, {s}, [n](Tape::Node& node) {
    if (!wants_grad(node, 0)) return;
    double g = node.output->grad[0];
    auto& ai = *node.inputs[0];
    ai.ensure_grad();
    for (std::size_t i = 0; i < n; ++i) ai.grad[i * n + i] += g;
  });
}

Tensor epsilon_threshold(const Tensor& a, double eps) {
  require(std::isfinite(eps), ErrorKind::NonFinite, "non-finite threshold");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > eps ? av[i] : 0.0;
  return make_op("epsilon_threshold", {a}, a.shape(), std::move(out),
                 [eps](Tape::Node& node) {
                   if (!wants_grad(node, 0)) return;
                   const auto& g = node.output->grad;
                   auto& ai = *node.inputs[0];
                   ai.ensure_grad();
                   for (std::size_t i = 0; i < g.size(); ++i)
                     if (ai.values[i] > eps) ai.grad[i] += g[i];
                 });
}

Tensor rowwise_div(const Tensor& num, const Tensor& den) {
  require(num.defined() && num.rank() == 2 && den.defined() && den.rank() == 1 &&
              den.shape()[0] == num.rows(),
          ErrorKind::ShapeMismatch, "rowwise_div needs (n,d) and (n)");
  std::size_t n = num.rows(), d = num.cols();
  const auto& nv = num.values();
  const auto& dv = den.values();
  std::vector<double> out(n * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    if (dv[r] == 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = nv[r * d + c] / dv[r];
  }
  return make_op("rowwise_div", {num, den}, num.shape(), std::move(out),
                 [n, d](Tape::Node& node) {
                   const auto& g = node.output->grad;
                   const auto& y = node.output->values;
                   const auto& dv = node.inputs[1]->values;
                   if (wants_grad(node, 0)) {
                     auto& ni = *node.inputs[0];
                     ni.ensure_grad();
                     for (std::size_t r = 0; r < n; ++r) {
                       if (dv[r] == 0.0) continue;
                       for (std::size_t c = 0; c < d; ++c)
                         ni.grad[r * d + c] += g[r * d + c] / dv[r];
                     }
                   }
                   if (wants_grad(node, 1)) {
                     auto& di = *node.inputs[1];
                     di.ensure_grad();
                     for (std::size_t r = 0; r < n; ++r) {
                       if (dv[r] == 0.0) continue;
                       double acc = 0.0;
                       for (std::size_t c = 0; c < d; ++c)
                         acc += g[r * d + c] * y[r * d + c];
                       di.grad[r] -= acc / dv[r];
                     }
                   }
                 });
}

// ---- training utilities ----------------------------------------------------

void sgd_step(std::vector<Tensor>& params, double lr) {
  for (Tensor& p : params) {
    if (!p.has_grad()) {
      throw_error(ErrorKind::MissingGrad, "sgd_step on parameter without gradient");
    }
  }
  for (Tensor& p : params) {
    auto& v = p.mutable_values();
    const auto& g = p.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p.zero_grad();
  }
}

double grad_check(const std::function<Tensor(const Tensor&)>& fn, Tensor x,
                  double step) {
  if (step <= 0.0) throw_error(ErrorKind::InvalidConfig, "grad_check step must be > 0");
  bool original_rg = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();

  std::vector<double> analytic;
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = fn(x);
    }
    if (loss.size() != 1) {
      throw_error(ErrorKind::NonScalarLoss, "grad_check fn must return a scalar");
    }
    tape.backward(loss);
    analytic = x.has_grad() ? x.grad() : std::vector<double>(x.size(), 0.0);
  }
  x.zero_grad();
  x.set_requires_grad(false);

  double max_rel = 0.0;
  auto& v = x.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double keep = v[i];
    v[i] = keep + step;
    double fp = fn(x).item();
    v[i] = keep - step;
    double fm = fn(x).item();
    v[i] = keep;
    double numeric = (fp - fm) / (2.0 * step);
    double rel = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  x.set_requires_grad(original_rg);
  return max_rel;
}

// ---- checkpoint io ---------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'D', 'G', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw_error(ErrorKind::IoError, "truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_error(ErrorKind::IoError, "cannot open " + path + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_raw(os, static_cast<std::uint64_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    write_raw(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(os, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) write_raw(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(tensor.values().data()),
             static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!os) throw_error(ErrorKind::IoError, "write failed for " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_error(ErrorKind::MissingFile, path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw_error(ErrorKind::IoError, "not a checkpoint file: " + path);
  }
  auto count = read_raw<std::uint64_t>(is);
  std::vector<std::pair<std::string, Tensor>> entries;
  entries.reserve(count);
  for (std::uint64_t e = 0; e < count; ++e) {
    auto name_len = read_raw<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    auto rank = read_raw<std::uint32_t>(is);
    if (rank == 0 || rank > 2) throw_error(ErrorKind::IoError, "bad rank in checkpoint");
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(read_raw<std::uint64_t>(is));
      total *= d;
    }
    std::vector<double> values(total);
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw_error(ErrorKind::IoError, "truncated checkpoint");
    entries.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return entries;
}

}  // namespace adgnn
