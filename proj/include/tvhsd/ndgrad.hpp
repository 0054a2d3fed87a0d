#pragma once

// Dense binary64 tensors with a small reverse-mode gradient tape.
//
// Broadcasting is limited to scalar-with-tensor and equal shapes. Adding a
// bias vector to every row of a matrix is its own op (add_rowwise).

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tvhsd::ndgrad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Matrix view. Rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Plain (non-recording) kernels: C += op(A) * op(B), row-major, A is m x k
// after op, B is k x n after op.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

class Graph;

// Handle to a node on a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

// Records a computation and propagates gradients from a scalar root.
// One Graph per forward/backward pass; not safe for concurrent use.
class Graph {
 public:
  // Accumulates into the gradient of each parent given the output gradient.
  using Backward = std::function<void(Graph&, const Tensor& out_grad)>;

  Var leaf(Tensor value);
  // Input data: ops may skip computing its gradient.
  Var constant(Tensor value);
  Var push(Tensor value, Backward backward);

  bool is_constant(Var v) const { return nodes_.at(v.id).constant; }

  const Tensor& value(Var v) const;
  // Zero tensor of the value's shape when the node was not reached.
  Tensor grad(Var v) const;

  void accumulate(Var v, const Tensor& g);
  void accumulate(Var v, std::size_t index, double g);

  // Seeds d(root)/d(root) = 1 and runs the tape in reverse.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool constant = false;
  };
  Tensor& grad_storage(std::size_t id);
  std::vector<Node> nodes_;
};

// Recording ops.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_rowwise(Var matrix, Var bias);
Var exp(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var sum(Var a);
Var mean(Var a);

// Scalar forms shared by the recording ops and the plain forward paths.
double sigmoid(double x);
double softplus(double x);

// Scalar-valued function of a parameter list, expressed on a Graph.
using ScalarFn = std::function<Var(Graph&, std::span<const Var>)>;

// max_i |analytic_i - fd_i| / max(1, |analytic_i|, |fd_i|) with central
// differences of width eps.
double grad_check(const ScalarFn& f, std::span<const Tensor> params, double eps);

}  // namespace tvhsd::ndgrad
