#include "nlnde/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "nlnde/errors.hpp"

namespace nlnde {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

class TensorOps {
 public:
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

NodePtr new_node(Shape shape, std::vector<double> data,
                 std::vector<NodePtr> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  return n;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank-" +
                         std::to_string(rank) + " tensor, got " +
                         shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  if (numel(shape) != data.size())
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  return TensorOps::wrap(new_node(std::move(shape), std::move(data), {}));
}

Tensor Tensor::param(Shape shape, std::vector<double> data) {
  Tensor t = constant(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> data(numel(shape), 0.0);
  return requires_grad ? param(std::move(shape), std::move(data))
                       : constant(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

std::size_t Tensor::rows() const {
  require_rank(*this, 2, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank(*this, 2, "cols");
  return node_->shape[1];
}

double Tensor::item() const {
  if (size() != 1)
    throw ContractError("item() requires a single-element tensor, got shape " +
                        shape_str(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require_rank(*this, 2, "at");
  return node_->data[r * node_->shape[1] + c];
}

void Tensor::zero_grad() {
  auto& g = node_->grad_buf();
  std::fill(g.begin(), g.end(), 0.0);
}

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    throw DimensionError("matmul: inner dimensions differ, " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  auto node = new_node({m, n}, std::move(out), {a.node(), b.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  TensorNode* pb = b.node().get();
  node->backprop = [self, pa, pb, m, k, n]() {
    const auto& g = self->grad;
    if (pa->requires_grad) {
      auto& ga = pa->grad_buf();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += g[i * n + j] * pb->data[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buf();
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += pa->data[i * k + p] * g[i * n + j];
          gb[p * n + j] += acc;
        }
    }
  };
  return TensorOps::wrap(node);
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require_rank(a, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (n != x.shape()[0])
    throw DimensionError("matvec: shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(x.shape()));
  std::vector<double> out(m, 0.0);
  const auto& av = a.value();
  const auto& xv = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j] * xv[j];
    out[i] = acc;
  }
  auto node = new_node({m}, std::move(out), {a.node(), x.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  TensorNode* px = x.node().get();
  node->backprop = [self, pa, px, m, n]() {
    const auto& g = self->grad;
    if (pa->requires_grad) {
      auto& ga = pa->grad_buf();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i] * px->data[j];
    }
    if (px->requires_grad) {
      auto& gx = px->grad_buf();
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += pa->data[i * n + j] * g[i];
        gx[j] += acc;
      }
    }
  };
  return TensorOps::wrap(node);
}

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_same_shape(const Tensor& a, const Tensor& b, const char* name,
                         Fwd fwd, Bwd bwd) {
  require_same_shape(a, b, name);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.at(i), b.at(i));
  auto node = new_node(a.shape(), std::move(out), {a.node(), b.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  TensorNode* pb = b.node().get();
  node->backprop = [self, pa, pb, bwd]() {
    for (std::size_t i = 0; i < self->data.size(); ++i) {
      const auto [da, db] = bwd(pa->data[i], pb->data[i], self->data[i]);
      if (pa->requires_grad) pa->grad_buf()[i] += self->grad[i] * da;
      if (pb->requires_grad) pb->grad_buf()[i] += self->grad[i] * db;
    }
  };
  return TensorOps::wrap(node);
}

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(const Tensor& a, Fwd fwd, Bwd bwd) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.at(i));
  auto node = new_node(a.shape(), std::move(out), {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa, bwd]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (std::size_t i = 0; i < self->data.size(); ++i)
      ga[i] += self->grad[i] * bwd(pa->data[i], self->data[i]);
  };
  return TensorOps::wrap(node);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double) { return std::pair{y, x}; });
}

Tensor scale(const Tensor& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_const(const Tensor& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> out;
  std::vector<NodePtr> parents;
  for (const Tensor& p : parts) {
    require_rank(p, 1, "concat");
    out.insert(out.end(), p.value().begin(), p.value().end());
    parents.push_back(p.node());
  }
  const std::size_t total = out.size();
  auto node = new_node({total}, std::move(out), std::move(parents));
  TensorNode* self = node.get();
  node->backprop = [self]() {
    std::size_t off = 0;
    for (auto& p : self->parents) {
      if (p->requires_grad) {
        auto& gp = p->grad_buf();
        for (std::size_t i = 0; i < p->data.size(); ++i)
          gp[i] += self->grad[off + i];
      }
      off += p->data.size();
    }
  };
  return TensorOps::wrap(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  std::vector<NodePtr> parents;
  for (const Tensor& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.rows() != m)
      throw DimensionError("concat_cols: row mismatch " +
                           shape_str(parts.front().shape()) + " vs " +
                           shape_str(p.shape()));
    total += p.cols();
    parents.push_back(p.node());
  }
  std::vector<double> out(m * total);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t n = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[i * total + off + j] = p.at(i, j);
    off += n;
  }
  auto node = new_node({m, total}, std::move(out), std::move(parents));
  TensorNode* self = node.get();
  node->backprop = [self, m, total]() {
    std::size_t off = 0;
    for (auto& p : self->parents) {
      const std::size_t n = p->shape[1];
      if (p->requires_grad) {
        auto& gp = p->grad_buf();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j)
            gp[i * n + j] += self->grad[i * total + off + j];
      }
      off += n;
    }
  };
  return TensorOps::wrap(node);
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t n = rows.front().size();
  std::vector<double> out;
  std::vector<NodePtr> parents;
  for (const Tensor& r : rows) {
    require_rank(r, 1, "stack_rows");
    if (r.size() != n)
      throw DimensionError("stack_rows: length mismatch " +
                           shape_str(rows.front().shape()) + " vs " +
                           shape_str(r.shape()));
    out.insert(out.end(), r.value().begin(), r.value().end());
    parents.push_back(r.node());
  }
  auto node = new_node({rows.size(), n}, std::move(out), std::move(parents));
  TensorNode* self = node.get();
  node->backprop = [self, n]() {
    for (std::size_t r = 0; r < self->parents.size(); ++r) {
      auto& p = self->parents[r];
      if (!p->requires_grad) continue;
      auto& gp = p->grad_buf();
      for (std::size_t j = 0; j < n; ++j) gp[j] += self->grad[r * n + j];
    }
  };
  return TensorOps::wrap(node);
}

Tensor softmax(const Tensor& a) {
  require_rank(a, 1, "softmax");
  const auto& v = a.value();
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    z += out[i];
  }
  for (auto& x : out) x /= z;
  auto node = new_node(a.shape(), std::move(out), {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa]() {
    if (!pa->requires_grad) return;
    double inner = 0.0;
    for (std::size_t i = 0; i < self->data.size(); ++i)
      inner += self->grad[i] * self->data[i];
    auto& ga = pa->grad_buf();
    for (std::size_t i = 0; i < self->data.size(); ++i)
      ga[i] += self->data[i] * (self->grad[i] - inner);
  };
  return TensorOps::wrap(node);
}

Tensor logsumexp(const Tensor& a) {
  require_rank(a, 1, "logsumexp");
  const auto& v = a.value();
  const double mx = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  auto node = new_node({1}, {lse}, {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (std::size_t i = 0; i < pa->data.size(); ++i)
      ga[i] += self->grad[0] * std::exp(pa->data[i] - self->data[0]);
  };
  return TensorOps::wrap(node);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(w, 2, "affine");
  require_rank(b, 1, "affine");
  const std::size_t out_dim = w.shape()[0], in_dim = w.shape()[1];
  if (b.size() != out_dim)
    throw DimensionError("affine: bias shape " + shape_str(b.shape()) +
                         " does not match weight " + shape_str(w.shape()));
  if (x.rank() == 1) {
    if (x.size() != in_dim)
      throw DimensionError("affine: input shape " + shape_str(x.shape()) +
                           " does not match weight " + shape_str(w.shape()));
    std::vector<double> out(out_dim);
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = b.at(o);
      for (std::size_t i = 0; i < in_dim; ++i)
        acc += w.at(o, i) * x.at(i);
      out[o] = acc;
    }
    auto node =
        new_node({out_dim}, std::move(out), {x.node(), w.node(), b.node()});
    TensorNode* self = node.get();
    TensorNode* px = x.node().get();
    TensorNode* pw = w.node().get();
    TensorNode* pb = b.node().get();
    node->backprop = [self, px, pw, pb, out_dim, in_dim]() {
      const auto& g = self->grad;
      if (px->requires_grad) {
        auto& gx = px->grad_buf();
        for (std::size_t i = 0; i < in_dim; ++i) {
          double acc = 0.0;
          for (std::size_t o = 0; o < out_dim; ++o)
            acc += pw->data[o * in_dim + i] * g[o];
          gx[i] += acc;
        }
      }
      if (pw->requires_grad) {
        auto& gw = pw->grad_buf();
        for (std::size_t o = 0; o < out_dim; ++o)
          for (std::size_t i = 0; i < in_dim; ++i)
            gw[o * in_dim + i] += g[o] * px->data[i];
      }
      if (pb->requires_grad) {
        auto& gb = pb->grad_buf();
        for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g[o];
      }
    };
    return TensorOps::wrap(node);
  }
  require_rank(x, 2, "affine");
  const std::size_t t_len = x.shape()[0];
  if (x.shape()[1] != in_dim)
    throw DimensionError("affine: input shape " + shape_str(x.shape()) +
                         " does not match weight " + shape_str(w.shape()));
  std::vector<double> out(t_len * out_dim);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = b.at(o);
      for (std::size_t i = 0; i < in_dim; ++i)
        acc += x.at(t, i) * w.at(o, i);
      out[t * out_dim + o] = acc;
    }
  auto node = new_node({t_len, out_dim}, std::move(out),
                       {x.node(), w.node(), b.node()});
  TensorNode* self = node.get();
  TensorNode* px = x.node().get();
  TensorNode* pw = w.node().get();
  TensorNode* pb = b.node().get();
  node->backprop = [self, px, pw, pb, t_len, out_dim, in_dim]() {
    const auto& g = self->grad;
    if (px->requires_grad) {
      auto& gx = px->grad_buf();
      for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t i = 0; i < in_dim; ++i) {
          double acc = 0.0;
          for (std::size_t o = 0; o < out_dim; ++o)
            acc += g[t * out_dim + o] * pw->data[o * in_dim + i];
          gx[t * in_dim + i] += acc;
        }
    }
    if (pw->requires_grad) {
      auto& gw = pw->grad_buf();
      for (std::size_t o = 0; o < out_dim; ++o)
        for (std::size_t i = 0; i < in_dim; ++i) {
          double acc = 0.0;
          for (std::size_t t = 0; t < t_len; ++t)
            acc += g[t * out_dim + o] * px->data[t * in_dim + i];
          gw[o * in_dim + i] += acc;
        }
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buf();
      for (std::size_t o = 0; o < out_dim; ++o) {
        double acc = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) acc += g[t * out_dim + o];
        gb[o] += acc;
      }
    }
  };
  return TensorOps::wrap(node);
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.value()) s += x;
  auto node = new_node({1}, {s}, {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (auto& g : ga) g += self->grad[0];
  };
  return TensorOps::wrap(node);
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row(const Tensor& a, std::size_t i) {
  require_rank(a, 2, "row");
  const std::size_t n = a.cols();
  if (i >= a.rows())
    throw DimensionError("row: index " + std::to_string(i) +
                         " out of range for " + shape_str(a.shape()));
  std::vector<double> out(a.value().begin() + i * n,
                          a.value().begin() + (i + 1) * n);
  auto node = new_node({n}, std::move(out), {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa, i, n]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self->grad[j];
  };
  return TensorOps::wrap(node);
}

Tensor col(const Tensor& a, std::size_t j) {
  require_rank(a, 2, "col");
  const std::size_t m = a.rows(), n = a.cols();
  if (j >= n)
    throw DimensionError("col: index " + std::to_string(j) +
                         " out of range for " + shape_str(a.shape()));
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = a.at(i, j);
  auto node = new_node({m}, std::move(out), {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa, j, n]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (std::size_t i = 0; i < self->data.size(); ++i)
      ga[i * n + j] += self->grad[i];
  };
  return TensorOps::wrap(node);
}

Tensor slice(const Tensor& a, std::size_t start, std::size_t len) {
  require_rank(a, 1, "slice");
  if (start + len > a.size())
    throw DimensionError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of bounds for " +
                         shape_str(a.shape()));
  std::vector<double> out(a.value().begin() + start,
                          a.value().begin() + start + len);
  auto node = new_node({len}, std::move(out), {a.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  node->backprop = [self, pa, start]() {
    if (!pa->requires_grad) return;
    auto& ga = pa->grad_buf();
    for (std::size_t i = 0; i < self->data.size(); ++i)
      ga[start + i] += self->grad[i];
  };
  return TensorOps::wrap(node);
}

Tensor pick(const Tensor& a, std::size_t i) { return slice(a, i, 1); }

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "dot");
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i) * b.at(i);
  auto node = new_node({1}, {s}, {a.node(), b.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  TensorNode* pb = b.node().get();
  node->backprop = [self, pa, pb]() {
    const double g = self->grad[0];
    if (pa->requires_grad) {
      auto& ga = pa->grad_buf();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * pb->data[i];
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buf();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * pa->data[i];
    }
  };
  return TensorOps::wrap(node);
}

Tensor smul(const Tensor& a, const Tensor& s) {
  if (s.size() != 1)
    throw DimensionError("smul: scale factor must be a scalar, got " +
                         shape_str(s.shape()));
  std::vector<double> out(a.size());
  const double sv = s.at(0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * sv;
  auto node = new_node(a.shape(), std::move(out), {a.node(), s.node()});
  TensorNode* self = node.get();
  TensorNode* pa = a.node().get();
  TensorNode* ps = s.node().get();
  node->backprop = [self, pa, ps]() {
    if (pa->requires_grad) {
      auto& ga = pa->grad_buf();
      for (std::size_t i = 0; i < ga.size(); ++i)
        ga[i] += self->grad[i] * ps->data[0];
    }
    if (ps->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self->data.size(); ++i)
        acc += self->grad[i] * pa->data[i];
      ps->grad_buf()[0] += acc;
    }
  };
  return TensorOps::wrap(node);
}

// ---- backward -------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward requires a scalar loss");

  // Post-order DFS; reverse gives a valid reverse-topological order.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (!seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buf()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->requires_grad && node->backprop && !node->grad.empty())
      node->backprop();
  }
}

double grad_check(const std::function<Tensor()>& f, Tensor x, double step) {
  Tensor loss = f();
  x.zero_grad();
  backward(loss);
  const std::vector<double> analytic = x.grad();

  auto& data = x.mutable_data();
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + step;
    const double fp = f().item();
    data[i] = orig - step;
    const double fm = f().item();
    data[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

// ---- rng / init -----------------------------------------------------------

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(gen_);
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(gen_);
}

bool Rng::bernoulli(double p_true) {
  std::bernoulli_distribution dist(p_true);
  return dist(gen_);
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(gen_);
}

Tensor glorot_init(Shape shape, Rng& rng) {
  const std::size_t fan_out = shape.size() == 2 ? shape[0] : 1;
  const std::size_t fan_in = shape.size() == 2 ? shape[1] : shape[0];
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = rng.uniform(-a, a);
  return Tensor::param(std::move(shape), std::move(data));
}

// ---- parameter store ------------------------------------------------------

Tensor ParameterStore::create(const std::string& name, Shape shape,
                              std::vector<double> data) {
  return add(name, Tensor::param(std::move(shape), std::move(data)));
}

Tensor ParameterStore::create_glorot(const std::string& name, Shape shape,
                                     Rng& rng) {
  return add(name, glorot_init(std::move(shape), rng));
}

Tensor ParameterStore::create_zeros(const std::string& name, Shape shape) {
  return add(name, Tensor::zeros(std::move(shape), /*requires_grad=*/true));
}

Tensor ParameterStore::add(const std::string& name, Tensor t) {
  if (!t.requires_grad())
    throw ContractError("parameter '" + name + "' must require gradients");
  if (by_name_.count(name))
    throw ContractError("duplicate parameter name '" + name + "'");
  order_.push_back(name);
  by_name_.emplace(name, t);
  return t;
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& [_, t] : by_name_) n += t.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (const std::string& name : order_) by_name_.at(name).zero_grad();
}

namespace {

constexpr char kMagic[8] = {'N', 'L', 'N', 'D', 'E', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& buf, double d) {
  put_u64(buf, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw ParseError("truncated checkpoint file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void ParameterStore::save(const std::filesystem::path& path) const {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(order_.size()));
  for (const std::string& name : order_) {
    const Tensor& t = by_name_.at(name);
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) put_u64(buf, d);
    for (double v : t.value()) put_f64(buf, v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw ParseError("not a parameter checkpoint: " + path.string());
  if (r.u32() != kVersion)
    throw ParseError("unsupported checkpoint version in " + path.string());
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.bytes(r.u32());
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u64();
    std::size_t n = numel(shape);
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64();
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
      create(name, std::move(shape), std::move(data));
    } else {
      if (it->second.shape() != shape)
        throw ParseError("checkpoint tensor '" + name + "' has shape " +
                         shape_str(shape) + ", expected " +
                         shape_str(it->second.shape()));
      it->second.mutable_data() = std::move(data);
    }
  }
}

// ---- optimizer ------------------------------------------------------------

double Optimizer::lr() const {
  return std::visit([](const auto& s) { return s.lr; }, spec_);
}

void Optimizer::set_lr(double lr) {
  std::visit([lr](auto& s) { s.lr = lr; }, spec_);
}

void Optimizer::step(ParameterStore& store) {
  bool any_grad = false;
  for (const std::string& name : store.names())
    if (!store.get(name).node()->grad.empty()) {
      any_grad = true;
      break;
    }
  if (!any_grad)
    throw ContractError("optimizer step called with no gradients populated");

  ++t_;
  for (const std::string& name : store.names()) {
    Tensor t = store.get(name);
    auto& data = t.mutable_data();
    auto& grad = t.node()->grad_buf();
    if (std::holds_alternative<SgdSpec>(spec_)) {
      const double lr = std::get<SgdSpec>(spec_).lr;
      for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * grad[i];
    } else {
      const AdamSpec& a = std::get<AdamSpec>(spec_);
      AdamState& st = state_[name];
      if (st.m.empty()) {
        st.m.assign(data.size(), 0.0);
        st.v.assign(data.size(), 0.0);
      }
      const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < data.size(); ++i) {
        st.m[i] = a.beta1 * st.m[i] + (1.0 - a.beta1) * grad[i];
        st.v[i] = a.beta2 * st.v[i] + (1.0 - a.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        data[i] -= a.lr * mhat / (std::sqrt(vhat) + a.eps);
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
  }
}

}  // namespace nlnde
