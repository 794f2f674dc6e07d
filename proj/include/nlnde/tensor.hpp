#ifndef NLNDE_TENSOR_HPP
#define NLNDE_TENSOR_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace nlnde {

using Shape = std::vector<std::size_t>;

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backprop;  // pulls this node's grad into parents

  std::size_t size() const { return data.size(); }
  std::vector<double>& grad_buf() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

// Dense tensor of doubles, rank 1 or 2, row-major, with a gradient slot.
// Values are immutable through the public API once built into a graph;
// parameter data is updated in place by the optimizer between graphs.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> data);
  static Tensor param(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& value() const { return node_->data; }
  double item() const;  // requires a single-element tensor
  double at(std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const { return node_->grad_buf(); }
  void zero_grad();

  // In-place mutation used by optimizers and finite differencing. Never
  // call on a tensor that is part of a live graph you still need.
  std::vector<double>& mutable_data() { return node_->data; }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend class TensorOps;
};

// ---- forward ops ----------------------------------------------------------
// Shape mismatches throw DimensionError naming both shapes.

Tensor matmul(const Tensor& a, const Tensor& b);   // [m,k]x[k,n] -> [m,n]
Tensor matvec(const Tensor& a, const Tensor& x);   // [m,n]x[n] -> [m]
Tensor add(const Tensor& a, const Tensor& b);      // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);      // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor concat(const std::vector<Tensor>& parts);   // 1-D, along the only axis
Tensor concat_cols(const std::vector<Tensor>& parts);  // 2-D, last axis
Tensor stack_rows(const std::vector<Tensor>& rows);    // k x [n] -> [k,n]
Tensor softmax(const Tensor& a);                   // 1-D
Tensor logsumexp(const Tensor& a);                 // 1-D -> scalar, max-shifted
// affine(x,W,b): x [in] -> W.x + b, or x [T,in] -> x.W^T + b per row.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor sum(const Tensor& a);                       // -> scalar
Tensor mean(const Tensor& a);                      // -> scalar
Tensor row(const Tensor& a, std::size_t i);        // [m,n] -> [n]
Tensor col(const Tensor& a, std::size_t j);        // [m,n] -> [m]
Tensor slice(const Tensor& a, std::size_t start, std::size_t len);  // 1-D
Tensor pick(const Tensor& a, std::size_t i);       // 1-D -> scalar
Tensor dot(const Tensor& a, const Tensor& b);      // 1-D . 1-D -> scalar
Tensor smul(const Tensor& a, const Tensor& s);     // a * scalar tensor s

// ---- reverse mode ---------------------------------------------------------

// Populates grad buffers of every requires_grad tensor reachable from
// `loss`, accumulating additively. Throws ContractError on non-scalar loss.
void backward(const Tensor& loss);

// Max over coordinates of |analytic - numeric| / max(1e-8, |a| + |n|),
// where numeric comes from central differences with the given step. `f`
// must rebuild the loss graph from the current contents of `x`.
double grad_check(const std::function<Tensor()>& f, Tensor x,
                  double step = 1e-5);

// ---- parameters and optimizers -------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  bool bernoulli(double p_true);
  std::size_t index(std::size_t n);  // uniform in [0, n)
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }
  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); rank-1 shapes are
// treated as a single output row.
Tensor glorot_init(Shape shape, Rng& rng);

// Named trainable tensors plus checkpoint IO. Iteration follows insertion
// order, which keeps optimizer traversal and file layout deterministic.
class ParameterStore {
 public:
  Tensor create(const std::string& name, Shape shape, std::vector<double> data);
  Tensor create_glorot(const std::string& name, Shape shape, Rng& rng);
  Tensor create_zeros(const std::string& name, Shape shape);
  Tensor add(const std::string& name, Tensor t);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }
  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_values() const;

  void zero_grads();

  // Binary checkpoint: magic, version, tensor count, then per tensor the
  // name, shape and raw little-endian doubles. Loading into a store that
  // already holds a name validates the shape and copies the data; unknown
  // names are created as fresh parameters.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, Tensor> by_name_;
};

struct SgdSpec {
  double lr = 0.1;
};
struct AdamSpec {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};
using OptimizerSpec = std::variant<SgdSpec, AdamSpec>;

class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec) : spec_(spec) {}

  double lr() const;
  void set_lr(double lr);

  // Applies one update to every parameter, then zeroes the gradients.
  // Throws ContractError if no parameter carries a gradient buffer.
  void step(ParameterStore& store);

 private:
  OptimizerSpec spec_;
  std::int64_t t_ = 0;
  struct AdamState {
    std::vector<double> m, v;
  };
  std::map<std::string, AdamState> state_;
};

}  // namespace nlnde

#endif  // NLNDE_TENSOR_HPP
