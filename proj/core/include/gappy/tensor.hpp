#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gappy {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

// Dense row-major tensor of doubles and a handle onto a reverse-mode autodiff
// graph. Copies share storage; the graph is released when the last handle
// to its output goes away.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  explicit operator bool() const { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;  // first extent
  std::size_t cols() const;  // product of the remaining extents (1 for rank 1)
  std::size_t size() const;

  std::span<double> values();
  std::span<const double> values() const;
  double operator()(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Gradient buffer; allocated (zero) on first access.
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  // Debug name of the operation that produced this tensor ("leaf" for inputs).
  const char* op() const;

  detail::Node* node() const { return node_.get(); }

 private:
  friend struct TensorAccess;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedTensor>;

// Reverse topological sweep from a scalar; accumulates into leaf gradients.
void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise. The right operand may also be a [1 x n] row or [m x 1]
// column that is broadcast across the left operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor one_minus(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);

// Rows of `table` selected by index.
Tensor gather_rows(const Tensor& table, const std::vector<int>& indices);

// Row-wise softmax with max subtraction. With a key mask, columns whose mask
// entry is false get probability 0; a row with no live column is all zero.
Tensor softmax_rows(const Tensor& a);
Tensor softmax_rows(const Tensor& a, const std::vector<bool>& key_mask);

// x: [s x c_in], kernel: [w x c_in x c_out], bias: [1 x c_out]. Zero "same"
// padding: ceil((w-1)/2) rows on the left, floor((w-1)/2) on the right.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

enum class Mode { Train, Infer };

struct NormState {
  Tensor running_mean;  // [1 x n]
  Tensor running_var;   // [1 x n]
  double momentum = 0.9;
  double eps = 1e-5;
  std::size_t fallbacks = 0;  // train-mode calls with < 2 valid rows

  static NormState create(std::size_t width);
};

// Column-wise normalization over the rows where mask is true. Train mode uses
// the batch statistics and folds them into the running averages; infer mode
// (and train mode with fewer than two valid rows) uses the running averages.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, const std::vector<bool>& mask,
                  NormState& state, Mode mode);

// Mean of -log softmax(logits)[gold] over rows with mask set; 0 when no row is set.
Tensor cross_entropy_masked(const Tensor& logits, const std::vector<int>& gold, const std::vector<bool>& mask);

// Identity forward; multiplies the incoming gradient by `factor`. Only used to
// plant a faulty backward pass when exercising the gradient checker.
Tensor scale_gradient(const Tensor& a, double factor);

}  // namespace gappy
