/* Copyright 2026 The gramnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Define-by-run reverse-mode differentiation over dense 2-D double tensors.
//
// A Graph owns every node created during one forward pass. Nodes are appended
// in creation order, so that order is already a topological order and
// backward() simply walks it in reverse. Scalars are 1x1 tensors.
//
//   Graph g;
//   Var w = g.variable(w0);
//   Var loss = mean(relu(matmul(x, w)));
//   g.backward(loss);
//   const Matrix& dw = g.grad(w);

#ifndef GRAMNET_AUTODIFF_H_
#define GRAMNET_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gramnet {

using Matrix = Eigen::MatrixXd;

std::string shape_str(Eigen::Index rows, Eigen::Index cols);

// Raised when operand shapes do not conform for a primitive.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by solve() when the system matrix is numerically singular.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  // Reciprocal condition number estimate of the offending matrix.
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Graph;

// Lightweight handle to a node in a Graph. Copyable; does not own anything.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  // Propagates the incoming gradient of a node to its parents' grad slots.
  using BackwardFn = std::function<void(Graph&, const Matrix& out_grad,
                                        const Matrix& out_value)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that receives a gradient.
  Var variable(Matrix value);
  // Leaf excluded from differentiation.
  Var constant(Matrix value);
  Var scalar(double value);

  // Zeroes every gradient, seeds d(root)/d(root) = 1 and propagates in
  // reverse creation order. Throws std::invalid_argument unless root is 1x1.
  void backward(Var root);

  const Matrix& value(Var v) const;
  // Gradient accumulated by the last backward(); zero for nodes the root
  // does not depend on.
  const Matrix& grad(Var v) const;
  std::string_view op(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Primitive plumbing. `parents` only controls whether the output needs a
  // gradient; the closure addresses parents itself through accumulate().
  Var push(std::string_view op, Matrix value, std::initializer_list<Var> parents,
           BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::string_view op;
    bool needs_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var add_node(std::string_view op, Matrix value, bool needs_grad,
               BackwardFn backward);

  std::vector<Node> nodes_;
};

// --- primitives ------------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise binary ops with 2-D broadcasting: along each axis the sizes must
// match or one of them must be 1 (row vectors, column vectors, scalars).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var neg(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
// log(sigmoid(a)) evaluated without overflow.
Var log_sigmoid(Var a);
Var square(Var a);

// scale * a + shift.
Var affine(Var a, double scale, double shift = 0.0);

// Full reductions return 1x1. Sums are exactly rounded, so the result does
// not depend on element order.
Var sum(Var a);
Var mean(Var a);
// Per-row sum, rows x 1.
Var sum_rows(Var a);
// Per-column sum, 1 x cols.
Var sum_cols(Var a);

// (i, j) = ||a_i - b_j||^2 for row sets a (n x d) and b (m x d).
Var pairwise_sq_dist(Var a, Var b);

// X with A X = B, A square. LU with partial pivoting; reverse rule uses the
// adjoint system. Throws SingularMatrixError when rcond(A) < kSingularRcond.
inline constexpr double kSingularRcond = 1e-14;
Var solve(Var a, Var b);

// Stacks row blocks: [a; b].
Var concat_rows(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

// --- named parameters ------------------------------------------------------

struct ParamTensor {
  std::string name;
  Matrix value;
  bool trainable = true;
};

// Ordered collection of uniquely named parameter tensors.
class ParamSet {
 public:
  // Throws std::invalid_argument on a duplicate name.
  ParamTensor& add(std::string name, Matrix value, bool trainable = true);

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  ParamTensor& operator[](std::size_t i) { return params_[i]; }
  const ParamTensor& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  const ParamTensor* find(std::string_view name) const;
  // Total number of scalar entries.
  std::size_t count() const;

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<ParamTensor> params_;
};

// Registers every parameter as a leaf of g (trainable ones as variables).
std::vector<Var> bind(Graph& g, const ParamSet& params);
std::vector<Matrix> gradients(const Graph& g, std::span<const Var> bound);

// --- gradient checking -----------------------------------------------------

using LossBuilder = std::function<Var(Graph&, std::span<const Var>)>;

// Max over all entries of |reverse-mode - central difference| /
// (|central difference| + 1e-8). `params` is restored on return.
// Throws NonFiniteError if any probe yields a non-finite loss.
double check_gradients(const LossBuilder& build, std::vector<Matrix>& params,
                       double step = 1e-5);

}  // namespace gramnet

#endif  // GRAMNET_AUTODIFF_H_
