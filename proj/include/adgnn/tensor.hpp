#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adgnn/error.hpp"

namespace adgnn {

class Tape;

namespace detail {

struct TensorImpl {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  std::size_t size() const { return values.size(); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

/// Dense double-precision tensor of rank 1 or 2 participating in
/// reverse-mode differentiation. Copies are shallow handles to the same
/// storage, so a parameter updated in place is seen by every holder.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, std::vector<double> values,
         bool requires_grad = false);

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor vector(std::vector<double> v, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> v, bool requires_grad = false);
  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double v,
                     bool requires_grad = false);
  static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi,
                        std::mt19937_64& rng, bool requires_grad = false);
  static Tensor eye(std::size_t n);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only

  const std::vector<double>& values() const;
  /// Direct storage access for the optimizer and finite-difference probes.
  std::vector<double>& mutable_values();
  double item() const;  // size-1 tensors only
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);
  bool has_grad() const;
  const std::vector<double>& grad() const;  // throws MissingGrad when absent
  void zero_grad();

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Ordered record of primitive applications. Ops append nodes while a
/// TapeScope for this tape is active and at least one input requires grad;
/// backward() replays the record once in reverse.
class Tape {
 public:
  struct Node {
    const char* op = "";
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    std::function<void(Node&)> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Seeds d(loss)/d(loss) = 1 and sweeps the record in reverse, visiting
  /// each node exactly once. Gradients accumulate on requires_grad inputs.
  void backward(const Tensor& loss);

  void record(Node node) { nodes_.push_back(std::move(node)); }
  std::size_t node_count() const { return nodes_.size(); }

  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<Node> nodes_;
};

/// RAII activation of a tape for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// ---- primitive ops ---------------------------------------------------------
// Every op validates shapes, checks the result for NaN/Inf, and records a
// backward closure on the active tape when any input requires grad.

Tensor matmul(const Tensor& a, const Tensor& b);  // (m,k)x(k,n) or (m,k)x(k)
Tensor add(const Tensor& a, const Tensor& b);     // same shape, or (n,d)+(d) rows
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);  // same shape, or (n,d)*(d) rows
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
/// Multiply every entry of x by the size-1 tensor s (gradients flow to both).
Tensor scale_by(const Tensor& x, const Tensor& s);
Tensor neg(const Tensor& a);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);
/// Stack rank-1 tensors of equal length d into an (n,d) matrix.
Tensor stack_rows(const std::vector<Tensor>& rows);
/// Same storage order, new shape of identical total size.
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor transpose(const Tensor& a);
Tensor sum(const Tensor& a);                       // -> [1]
Tensor sum(const Tensor& a, std::size_t axis);     // rank-2 -> rank-1
Tensor mean(const Tensor& a);                      // -> [1]
Tensor mean(const Tensor& a, std::size_t axis);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor softmax(const Tensor& a, std::size_t axis = 0);
Tensor log_softmax(const Tensor& a, std::size_t axis = 0);
/// Unit-normalizes a rank-1 tensor (axis ignored) or the rows (axis=1) /
/// columns (axis=0) of a rank-2 tensor. A zero slice is an error.
Tensor l2_normalize(const Tensor& a, std::size_t axis = 1);
Tensor frobenius_norm_sq(const Tensor& a);  // -> [1]
Tensor trace(const Tensor& a);              // square rank-2 -> [1]
/// Keeps entries strictly greater than eps, zeroes the rest. The gate is
/// hard: dropped entries carry zero gradient.
Tensor epsilon_threshold(const Tensor& a, double eps);
/// Divides row i of num by den[i]; rows with den[i] == 0 stay zero.
Tensor rowwise_div(const Tensor& num, const Tensor& den);

// ---- training utilities ----------------------------------------------------

/// p <- p - lr * grad for every parameter, then clears grads.
/// Throws MissingGrad when a parameter has no populated gradient.
void sgd_step(std::vector<Tensor>& params, double lr);

/// Max over coordinates of |analytic - numeric| / max(1e-8, |numeric|),
/// numeric via centered differences of the given step. fn must be
/// deterministic.
double grad_check(const std::function<Tensor(const Tensor&)>& fn, Tensor x,
                  double step = 1e-5);

// ---- checkpoint io ---------------------------------------------------------
// Flat little-endian binary: magic "ADGCKPT1", u64 count, then per entry
// u32 name length, name bytes, u32 rank, u64 dims, raw IEEE-754 doubles.
// Round-trips bit for bit.

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace adgnn
