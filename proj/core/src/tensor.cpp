#include "gappy/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "gappy/errors.hpp"

namespace gappy {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty(); }

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;

struct TensorAccess {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const std::shared_ptr<Node>& node_of(const Tensor& t) {
  if (!t) throw std::invalid_argument("operation on an empty tensor handle");
  return TensorAccess::node(t);
}

// Builds an op result. Parents and the backward closure are kept only when
// some parent takes part in differentiation.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  n->requires_grad = std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return TensorAccess::wrap(std::move(n));
}

// Gradient buffer of a parent, or nullptr when it does not need one.
double* grad_of(Node& parent) { return parent.requires_grad ? parent.grad_buffer().data() : nullptr; }

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

enum class Broadcast { Same, Row, Col };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::Same;
  if (a.rank() == 2 && b.rank() == 2) {
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
    if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  }
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

std::size_t broadcast_index(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::Same: return i;
    case Broadcast::Row: return i % cols;
    case Broadcast::Col: return i / cols;
  }
  return i;
}

enum class Binary { Add, Sub, Mul };

Tensor binary(Binary kind, const Tensor& a, const Tensor& b, const char* op) {
  const Broadcast bc = broadcast_kind(a, b, op);
  const std::size_t n = a.size();
  const std::size_t cols = a.rank() >= 2 ? a.cols() : 1;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[i];
    const double y = bv[broadcast_index(bc, i, cols)];
    out[i] = kind == Binary::Add ? x + y : kind == Binary::Sub ? x - y : x * y;
  }
  return make_result(op, a.shape(), std::move(out), {node_of(a), node_of(b)}, [kind, bc, cols](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    double* ga = grad_of(pa);
    double* gb = grad_of(pb);
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = self.grad[i];
      const std::size_t j = broadcast_index(bc, i, cols);
      switch (kind) {
        case Binary::Add:
          if (ga) ga[i] += g;
          if (gb) gb[j] += g;
          break;
        case Binary::Sub:
          if (ga) ga[i] += g;
          if (gb) gb[j] -= g;
          break;
        case Binary::Mul:
          if (ga) ga[i] += g * pb.value[j];
          if (gb) gb[j] += g * pa.value[i];
          break;
      }
    }
  });
}

// Elementwise map whose derivative is a function of input and output.
template <typename F, typename D>
Tensor unary(const Tensor& a, const char* op, F f, D df) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_result(op, a.shape(), std::move(out), {node_of(a)}, [df](Node& self) {
    Node& p = *self.parents[0];
    double* g = grad_of(p);
    if (!g) return;
    for (std::size_t i = 0; i < self.value.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = product(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  if (product(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not hold " + std::to_string(values.size()) +
                         " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return node_of(*this)->shape; }
std::size_t Tensor::rows() const { return shape().front(); }
std::size_t Tensor::cols() const {
  const Shape& s = shape();
  return std::accumulate(s.begin() + 1, s.end(), std::size_t{1}, std::multiplies<>());
}
std::size_t Tensor::size() const { return node_of(*this)->value.size(); }
std::span<double> Tensor::values() { return node_of(*this)->value; }
std::span<const double> Tensor::values() const { return node_of(*this)->value; }

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return values()[0];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }
bool Tensor::has_grad() const { return !node_of(*this)->grad.empty(); }
std::span<double> Tensor::grad() { return node_of(*this)->grad_buffer(); }
std::span<const double> Tensor::grad() const { return node_of(*this)->grad_buffer(); }
void Tensor::zero_grad() {
  auto& g = node_of(*this)->grad;
  std::fill(g.begin(), g.end(), 0.0);
}
const char* Tensor::op() const { return node_of(*this)->op; }

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw DimensionError("backward() needs a scalar, got " + shape_string(loss.shape()));
  Node* root = node_of(loss).get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen{root};
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order)
    if (!n->is_leaf()) n->grad.assign(n->value.size(), 0.0);
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents differ for " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const double* A = a.values().data();
  const double* B = b.values().data();
  std::vector<double> C(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(C), {node_of(a), node_of(b)}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* G = self.grad.data();
    if (double* ga = grad_of(pa)) {
      // dA = dC * B^T
      const double* B = pb.value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (double* gb = grad_of(pb)) {
      // dB = A^T * dC
      const double* A = pa.value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * G[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_result("transpose", {n, m}, std::move(out), {node_of(a)}, [m, n](Node& self) {
    double* g = grad_of(*self.parents[0]);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(Binary::Add, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(Binary::Sub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(Binary::Mul, a, b, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor one_minus(const Tensor& a) {
  return unary(
      a, "one_minus", [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor scale_gradient(const Tensor& a, double factor) {
  return unary(
      a, "scale_gradient", [](double x) { return x; }, [factor](double, double) { return factor; });
}

Tensor sum(const Tensor& a) {
  const auto av = a.values();
  const double total = std::accumulate(av.begin(), av.end(), 0.0);
  return make_result("sum", {1}, {total}, {node_of(a)}, [](Node& self) {
    Node& p = *self.parents[0];
    double* g = grad_of(p);
    for (std::size_t i = 0; i < p.value.size(); ++i) g[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) return scale(sum(a), 0.0);
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t s = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != s) {
      throw DimensionError("concat_cols: row count " + std::to_string(p.rows()) + " differs from " +
                           std::to_string(s));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(s * total);
  std::vector<std::shared_ptr<Node>> parents;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::size_t r = 0; r < s; ++r)
      std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
    parents.push_back(node_of(parts[k]));
  }
  return make_result("concat_cols", {s, total}, std::move(out), std::move(parents),
                     [s, total, widths](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (double* g = grad_of(*self.parents[k])) {
                           for (std::size_t r = 0; r < s; ++r)
                             for (std::size_t c = 0; c < widths[k]; ++c)
                               g[r * widths[k] + c] += self.grad[r * total + offset + c];
                         }
                         offset += widths[k];
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t n = parts.front().cols();
  std::vector<std::size_t> heights;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column count " + std::to_string(p.cols()) + " differs from " +
                           std::to_string(n));
    }
    heights.push_back(p.rows());
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * n);
  std::vector<std::shared_ptr<Node>> parents;
  for (const Tensor& p : parts) {
    const auto pv = p.values();
    out.insert(out.end(), pv.begin(), pv.end());
    parents.push_back(node_of(p));
  }
  return make_result("concat_rows", {total, n}, std::move(out), std::move(parents), [n, heights](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < heights.size(); ++k) {
      const std::size_t len = heights[k] * n;
      if (double* g = grad_of(*self.parents[k]))
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[offset + i];
      offset += len;
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_rows");
  if (begin + count > a.rows()) {
    throw DimensionError("slice_rows: rows " + std::to_string(begin) + "+" + std::to_string(count) +
                         " outside " + shape_string(a.shape()));
  }
  const std::size_t n = a.cols();
  const auto av = a.values();
  std::vector<double> out(av.begin() + begin * n, av.begin() + (begin + count) * n);
  return make_result("slice_rows", {count, n}, std::move(out), {node_of(a)}, [begin, n](Node& self) {
    double* g = grad_of(*self.parents[0]) + begin * n;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_cols");
  if (begin + count > a.cols()) {
    throw DimensionError("slice_cols: columns " + std::to_string(begin) + "+" + std::to_string(count) +
                         " outside " + shape_string(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  std::vector<double> out(m * count);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(av.data() + r * n + begin, count, out.data() + r * count);
  return make_result("slice_cols", {m, count}, std::move(out), {node_of(a)}, [m, n, begin, count](Node& self) {
    double* g = grad_of(*self.parents[0]);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < count; ++c) g[r * n + begin + c] += self.grad[r * count + c];
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& indices) {
  require_rank2(table, "gather_rows");
  const std::size_t rows = table.rows(), n = table.cols();
  const auto tv = table.values();
  std::vector<double> out(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(idx) + " outside " + shape_string(table.shape()));
    }
    std::copy_n(tv.data() + idx * n, n, out.data() + i * n);
  }
  return make_result("gather_rows", {indices.size(), n}, std::move(out), {node_of(table)},
                     [indices, n](Node& self) {
                       double* g = grad_of(*self.parents[0]);
                       for (std::size_t i = 0; i < indices.size(); ++i)
                         for (std::size_t c = 0; c < n; ++c) g[indices[i] * n + c] += self.grad[i * n + c];
                     });
}

Tensor softmax_rows(const Tensor& a) { return softmax_rows(a, std::vector<bool>(a.rank() == 2 ? a.cols() : 0, true)); }

Tensor softmax_rows(const Tensor& a, const std::vector<bool>& key_mask) {
  require_rank2(a, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (key_mask.size() != n) {
    throw DimensionError("softmax_rows: mask of " + std::to_string(key_mask.size()) + " for " + std::to_string(n) +
                         " columns");
  }
  const auto av = a.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = av.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c)
      if (key_mask[c]) mx = std::max(mx, row[c]);
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!key_mask[c]) continue;
      out[r * n + c] = std::exp(row[c] - mx);
      z += out[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= z;
  }
  return make_result("softmax_rows", {m, n}, std::move(out), {node_of(a)}, [m, n](Node& self) {
    double* g = grad_of(*self.parents[0]);
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = self.value.data() + r * n;
      const double* gy = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank2(x, "conv1d");
  if (kernel.rank() != 3) throw DimensionError("conv1d: kernel must be [w x c_in x c_out], got " + shape_string(kernel.shape()));
  const std::size_t s = x.rows(), cin = x.cols();
  const std::size_t w = kernel.shape()[0], kin = kernel.shape()[1], cout = kernel.shape()[2];
  if (w == 0) throw DimensionError("conv1d: kernel width must be positive");
  if (kin != cin) {
    throw DimensionError("conv1d: input has " + std::to_string(cin) + " channels, kernel expects " +
                         std::to_string(kin));
  }
  if (bias.size() != cout) {
    throw DimensionError("conv1d: bias " + shape_string(bias.shape()) + " for " + std::to_string(cout) + " outputs");
  }
  const std::ptrdiff_t pad_left = static_cast<std::ptrdiff_t>(w / 2);
  const double* X = x.values().data();
  const double* K = kernel.values().data();
  const double* Bv = bias.values().data();
  std::vector<double> out(s * cout);
  for (std::size_t t = 0; t < s; ++t) {
    double* orow = out.data() + t * cout;
    std::copy_n(Bv, cout, orow);
    for (std::size_t k = 0; k < w; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad_left;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(s)) continue;
      const double* xrow = X + src * cin;
      const double* kk = K + k * cin * cout;
      for (std::size_t c = 0; c < cin; ++c) {
        const double xv = xrow[c];
        if (xv == 0.0) continue;
        const double* krow = kk + c * cout;
        for (std::size_t o = 0; o < cout; ++o) orow[o] += xv * krow[o];
      }
    }
  }
  return make_result(
      "conv1d", {s, cout}, std::move(out), {node_of(x), node_of(kernel), node_of(bias)},
      [s, cin, cout, w, pad_left](Node& self) {
        Node& px = *self.parents[0];
        Node& pk = *self.parents[1];
        double* gx = grad_of(px);
        double* gk = grad_of(pk);
        double* gb = grad_of(*self.parents[2]);
        const double* G = self.grad.data();
        for (std::size_t t = 0; t < s; ++t) {
          const double* grow = G + t * cout;
          if (gb)
            for (std::size_t o = 0; o < cout; ++o) gb[o] += grow[o];
          for (std::size_t k = 0; k < w; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad_left;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(s)) continue;
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t kbase = (k * cin + c) * cout;
              if (gx) {
                double acc = 0.0;
                for (std::size_t o = 0; o < cout; ++o) acc += grow[o] * pk.value[kbase + o];
                gx[src * cin + c] += acc;
              }
              if (gk) {
                const double xv = px.value[src * cin + c];
                for (std::size_t o = 0; o < cout; ++o) gk[kbase + o] += xv * grow[o];
              }
            }
          }
        }
      });
}

NormState NormState::create(std::size_t width) {
  NormState st;
  st.running_mean = Tensor::zeros({1, width});
  st.running_var = Tensor::full({1, width}, 1.0);
  return st;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, const std::vector<bool>& mask,
                  NormState& state, Mode mode) {
  require_rank2(x, "batch_norm");
  const std::size_t s = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n || state.running_mean.size() != n || state.running_var.size() != n) {
    throw DimensionError("batch_norm: parameters do not match width " + std::to_string(n));
  }
  if (mask.size() != s) throw DimensionError("batch_norm: mask length differs from row count");
  const std::size_t valid = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  bool use_batch = mode == Mode::Train;
  if (use_batch && valid < 2) {
    use_batch = false;
    ++state.fallbacks;
  }
  const auto xv = x.values();
  std::vector<double> mu(n), inv(n);
  if (use_batch) {
    std::vector<double> var(n, 0.0);
    for (std::size_t r = 0; r < s; ++r)
      if (mask[r])
        for (std::size_t c = 0; c < n; ++c) mu[c] += xv[r * n + c];
    for (double& v : mu) v /= static_cast<double>(valid);
    for (std::size_t r = 0; r < s; ++r)
      if (mask[r])
        for (std::size_t c = 0; c < n; ++c) {
          const double d = xv[r * n + c] - mu[c];
          var[c] += d * d;
        }
    auto rm = state.running_mean.values();
    auto rv = state.running_var.values();
    for (std::size_t c = 0; c < n; ++c) {
      var[c] /= static_cast<double>(valid);
      inv[c] = 1.0 / std::sqrt(var[c] + state.eps);
      rm[c] = state.momentum * rm[c] + (1.0 - state.momentum) * mu[c];
      rv[c] = state.momentum * rv[c] + (1.0 - state.momentum) * var[c];
    }
  } else {
    const auto rm = state.running_mean.values();
    const auto rv = state.running_var.values();
    for (std::size_t c = 0; c < n; ++c) {
      mu[c] = rm[c];
      inv[c] = 1.0 / std::sqrt(rv[c] + state.eps);
    }
  }
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<double> xhat(s * n), out(s * n);
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      xhat[i] = (xv[i] - mu[c]) * inv[c];
      out[i] = gv[c] * xhat[i] + bv[c];
    }
  return make_result(
      "batch_norm", {s, n}, std::move(out), {node_of(x), node_of(gamma), node_of(beta)},
      [s, n, valid, use_batch, mask, inv = std::move(inv), xhat = std::move(xhat)](Node& self) {
        Node& pg = *self.parents[1];
        double* gx = grad_of(*self.parents[0]);
        double* gg = grad_of(pg);
        double* gbeta = grad_of(*self.parents[2]);
        const double* G = self.grad.data();
        std::vector<double> sum_gh(n, 0.0), sum_gh_xhat(n, 0.0);
        for (std::size_t r = 0; r < s; ++r)
          for (std::size_t c = 0; c < n; ++c) {
            const std::size_t i = r * n + c;
            if (gg) gg[c] += G[i] * xhat[i];
            if (gbeta) gbeta[c] += G[i];
            const double gh = G[i] * pg.value[c];
            sum_gh[c] += gh;
            sum_gh_xhat[c] += gh * xhat[i];
          }
        if (!gx) return;
        const double inv_m = use_batch ? 1.0 / static_cast<double>(valid) : 0.0;
        for (std::size_t r = 0; r < s; ++r)
          for (std::size_t c = 0; c < n; ++c) {
            const std::size_t i = r * n + c;
            double d = G[i] * pg.value[c] * inv[c];
            if (use_batch && mask[r]) d -= inv[c] * inv_m * (sum_gh[c] + xhat[i] * sum_gh_xhat[c]);
            gx[i] += d;
          }
      });
}

Tensor cross_entropy_masked(const Tensor& logits, const std::vector<int>& gold, const std::vector<bool>& mask) {
  require_rank2(logits, "cross_entropy_masked");
  const std::size_t s = logits.rows(), k = logits.cols();
  if (gold.size() != s || mask.size() != s) {
    throw DimensionError("cross_entropy_masked: " + std::to_string(s) + " rows but " + std::to_string(gold.size()) +
                         " labels and " + std::to_string(mask.size()) + " mask entries");
  }
  const auto lv = logits.values();
  std::vector<double> probs(s * k, 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < s; ++r) {
    if (!mask[r]) continue;
    if (gold[r] < 0 || static_cast<std::size_t>(gold[r]) >= k) {
      throw std::out_of_range("cross_entropy_masked: class index " + std::to_string(gold[r]) + " outside 0.." +
                              std::to_string(k - 1));
    }
    const double* row = lv.data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      probs[r * k + c] = std::exp(row[c] - mx);
      z += probs[r * k + c];
    }
    for (std::size_t c = 0; c < k; ++c) probs[r * k + c] /= z;
    total += std::log(z) + mx - row[gold[r]];
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  return make_result("cross_entropy", {1}, {loss}, {node_of(logits)},
                     [s, k, count, gold, mask, probs = std::move(probs)](Node& self) {
                       if (count == 0) return;
                       double* g = grad_of(*self.parents[0]);
                       const double scale = self.grad[0] / static_cast<double>(count);
                       for (std::size_t r = 0; r < s; ++r) {
                         if (!mask[r]) continue;
                         for (std::size_t c = 0; c < k; ++c) {
                           const double target = static_cast<int>(c) == gold[r] ? 1.0 : 0.0;
                           g[r * k + c] += scale * (probs[r * k + c] - target);
                         }
                       }
                     });
}

}  // namespace gappy
