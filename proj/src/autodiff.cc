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

#include "gramnet/autodiff.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gramnet/summation.h"

namespace gramnet {

std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

namespace {

std::string shape_of(const Var& v) { return shape_str(v.rows(), v.cols()); }

[[noreturn]] void shape_mismatch(std::string_view op, const Var& a,
                                 const Var& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a) +
                   " vs " + shape_of(b));
}

void same_graph(std::string_view op, const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) {
    throw std::invalid_argument(std::string(op) +
                                ": operands belong to different graphs");
  }
}

// Broadcast output extent along one axis, or -1 if incompatible.
Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  return -1;
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) {
    return Matrix::Constant(rows, cols, m(0, 0));
  }
  if (m.rows() == 1) return m.replicate(rows, 1);
  return m.replicate(1, cols);
}

// Sums a broadcast gradient back down to the operand's shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

struct Broadcast {
  Eigen::Index rows;
  Eigen::Index cols;
};

Broadcast broadcast_shape(std::string_view op, const Var& a, const Var& b) {
  same_graph(op, a, b);
  const Eigen::Index r = broadcast_dim(a.rows(), b.rows());
  const Eigen::Index c = broadcast_dim(a.cols(), b.cols());
  if (r < 0 || c < 0) shape_mismatch(op, a, b);
  return {r, c};
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// --- Var / Graph -------------------------------------------------------------

const Matrix& Var::value() const { return graph_->value(*this); }
const Matrix& Var::grad() const { return graph_->grad(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw ShapeError("scalar: node is not 1x1 but " + shape_of(*this));
  }
  return v(0, 0);
}

Var Graph::add_node(std::string_view op, Matrix value, bool needs_grad,
                    BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.needs_grad = needs_grad;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::variable(Matrix value) {
  return add_node("variable", std::move(value), true, nullptr);
}

Var Graph::constant(Matrix value) {
  return add_node("constant", std::move(value), false, nullptr);
}

Var Graph::scalar(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

Var Graph::push(std::string_view op, Matrix value,
                std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (&p.graph() != this) {
      throw std::invalid_argument(std::string(op) +
                                  ": parent belongs to a different graph");
    }
    needs = needs || nodes_[p.id()].needs_grad;
  }
  return add_node(op, std::move(value), needs,
                  needs ? std::move(backward) : nullptr);
}

const Matrix& Graph::value(Var v) const { return nodes_.at(v.id()).value; }

const Matrix& Graph::grad(Var v) const { return nodes_.at(v.id()).grad; }

std::string_view Graph::op(Var v) const { return nodes_.at(v.id()).op; }

void Graph::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return;
  n.grad += g;
  n.has_grad = true;
}

void Graph::backward(Var root) {
  if (&root.graph() != this) {
    throw std::invalid_argument("backward: root belongs to a different graph");
  }
  if (nodes_[root.id()].value.size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got " +
                                shape_of(root));
  }
  for (Node& n : nodes_) {
    n.grad.setZero(n.value.rows(), n.value.cols());
    n.has_grad = false;
  }
  Node& r = nodes_[root.id()];
  if (!r.needs_grad) return;
  r.grad(0, 0) = 1.0;
  r.has_grad = true;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, n.grad, n.value);
  }
}

// --- primitives --------------------------------------------------------------

Var matmul(Var a, Var b) {
  same_graph("matmul", a, b);
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  Matrix out = a.value() * b.value();
  return a.graph().push("matmul", std::move(out), {a, b},
                        [a, b](Graph& g, const Matrix& go, const Matrix&) {
                          if (g.needs_grad(a)) {
                            g.accumulate(a, go * g.value(b).transpose());
                          }
                          if (g.needs_grad(b)) {
                            g.accumulate(b, g.value(a).transpose() * go);
                          }
                        });
}

Var transpose(Var a) {
  return a.graph().push("transpose", a.value().transpose(), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, go.transpose());
                        });
}

Var add(Var a, Var b) {
  const auto [r, c] = broadcast_shape("add", a, b);
  Matrix out = expand(a.value(), r, c) + expand(b.value(), r, c);
  return a.graph().push(
      "add", std::move(out), {a, b},
      [a, b](Graph& g, const Matrix& go, const Matrix&) {
        g.accumulate(a, reduce_to(go, a.rows(), a.cols()));
        g.accumulate(b, reduce_to(go, b.rows(), b.cols()));
      });
}

Var sub(Var a, Var b) {
  const auto [r, c] = broadcast_shape("sub", a, b);
  Matrix out = expand(a.value(), r, c) - expand(b.value(), r, c);
  return a.graph().push(
      "sub", std::move(out), {a, b},
      [a, b](Graph& g, const Matrix& go, const Matrix&) {
        g.accumulate(a, reduce_to(go, a.rows(), a.cols()));
        g.accumulate(b, reduce_to(-go, b.rows(), b.cols()));
      });
}

Var mul(Var a, Var b) {
  const auto [r, c] = broadcast_shape("mul", a, b);
  Matrix out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  return a.graph().push(
      "mul", std::move(out), {a, b},
      [a, b, r, c](Graph& g, const Matrix& go, const Matrix&) {
        if (g.needs_grad(a)) {
          Matrix ga = go.cwiseProduct(expand(g.value(b), r, c));
          g.accumulate(a, reduce_to(ga, a.rows(), a.cols()));
        }
        if (g.needs_grad(b)) {
          Matrix gb = go.cwiseProduct(expand(g.value(a), r, c));
          g.accumulate(b, reduce_to(gb, b.rows(), b.cols()));
        }
      });
}

Var div(Var a, Var b) {
  const auto [r, c] = broadcast_shape("div", a, b);
  Matrix out = expand(a.value(), r, c).cwiseQuotient(expand(b.value(), r, c));
  return a.graph().push(
      "div", std::move(out), {a, b},
      [a, b, r, c](Graph& g, const Matrix& go, const Matrix& y) {
        const Matrix bx = expand(g.value(b), r, c);
        if (g.needs_grad(a)) {
          g.accumulate(a, reduce_to(go.cwiseQuotient(bx), a.rows(), a.cols()));
        }
        if (g.needs_grad(b)) {
          Matrix gb = -go.cwiseProduct(y).cwiseQuotient(bx);
          g.accumulate(b, reduce_to(gb, b.rows(), b.cols()));
        }
      });
}

Var neg(Var a) {
  return a.graph().push("neg", -a.value(), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, -go);
                        });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  return a.graph().push("exp", std::move(out), {a},
                        [a](Graph& g, const Matrix& go, const Matrix& y) {
                          g.accumulate(a, go.cwiseProduct(y));
                        });
}

Var log(Var a) {
  Matrix out = a.value().array().log().matrix();
  return a.graph().push("log", std::move(out), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, go.cwiseQuotient(g.value(a)));
                        });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph().push(
      "relu", std::move(out), {a},
      [a](Graph& g, const Matrix& go, const Matrix&) {
        const Matrix& x = g.value(a);
        g.accumulate(a, (x.array() > 0.0).select(go, 0.0).matrix());
      });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.graph().push(
      "tanh", std::move(out), {a},
      [a](Graph& g, const Matrix& go, const Matrix& y) {
        g.accumulate(a, (go.array() * (1.0 - y.array().square())).matrix());
      });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr(&stable_sigmoid);
  return a.graph().push(
      "sigmoid", std::move(out), {a},
      [a](Graph& g, const Matrix& go, const Matrix& y) {
        g.accumulate(a, (go.array() * y.array() * (1.0 - y.array())).matrix());
      });
}

Var log_sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) {
    return std::min(x, 0.0) - std::log1p(std::exp(-std::fabs(x)));
  });
  return a.graph().push(
      "log_sigmoid", std::move(out), {a},
      [a](Graph& g, const Matrix& go, const Matrix&) {
        const Matrix s =
            g.value(a).unaryExpr([](double x) { return stable_sigmoid(-x); });
        g.accumulate(a, go.cwiseProduct(s));
      });
}

Var square(Var a) {
  Matrix out = a.value().array().square().matrix();
  return a.graph().push("square", std::move(out), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, 2.0 * go.cwiseProduct(g.value(a)));
                        });
}

Var affine(Var a, double scale, double shift) {
  Matrix out = (scale * a.value().array() + shift).matrix();
  return a.graph().push("affine", std::move(out), {a},
                        [a, scale](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, scale * go);
                        });
}

Var sum(Var a) {
  const Matrix& x = a.value();
  const double s = exact_sum(std::span<const double>(x.data(), x.size()));
  return a.graph().push(
      "sum", Matrix::Constant(1, 1, s), {a},
      [a](Graph& g, const Matrix& go, const Matrix&) {
        g.accumulate(a, Matrix::Constant(a.rows(), a.cols(), go(0, 0)));
      });
}

Var mean(Var a) {
  const Matrix& x = a.value();
  const double n = static_cast<double>(x.size());
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  const double s = exact_sum(std::span<const double>(x.data(), x.size())) / n;
  return a.graph().push(
      "mean", Matrix::Constant(1, 1, s), {a},
      [a, n](Graph& g, const Matrix& go, const Matrix&) {
        g.accumulate(a, Matrix::Constant(a.rows(), a.cols(), go(0, 0) / n));
      });
}

Var sum_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[j] = x(i, j);
    out(i, 0) = exact_sum(row);
  }
  return a.graph().push("sum_rows", std::move(out), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, go.replicate(1, a.cols()));
                        });
}

Var sum_cols(Var a) {
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out(0, j) = exact_sum(
        std::span<const double>(x.col(j).data(), x.rows()));
  }
  return a.graph().push("sum_cols", std::move(out), {a},
                        [a](Graph& g, const Matrix& go, const Matrix&) {
                          g.accumulate(a, go.replicate(a.rows(), 1));
                        });
}

Var pairwise_sq_dist(Var a, Var b) {
  same_graph("pairwise_sq_dist", a, b);
  if (a.cols() != b.cols()) shape_mismatch("pairwise_sq_dist", a, b);
  // Row i of a is column i of at, contiguous.
  const Matrix at = a.value().transpose();
  const Matrix bt = b.value().transpose();
  const Eigen::Index n = at.cols(), m = bt.cols(), d = at.rows();
  Matrix out(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double* yj = bt.col(j).data();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* xi = at.col(i).data();
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = xi[k] - yj[k];
        s += diff * diff;
      }
      out(i, j) = std::max(s, 0.0);
    }
  }
  return a.graph().push(
      "pairwise_sq_dist", std::move(out), {a, b},
      [a, b](Graph& g, const Matrix& go, const Matrix&) {
        const Matrix& x = g.value(a);
        const Matrix& y = g.value(b);
        if (g.needs_grad(a)) {
          Matrix ga = 2.0 * (go.rowwise().sum().asDiagonal() * x - go * y);
          g.accumulate(a, ga);
        }
        if (g.needs_grad(b)) {
          Matrix gb = 2.0 * (go.colwise().sum().transpose().asDiagonal() * y -
                             go.transpose() * x);
          g.accumulate(b, gb);
        }
      });
}

namespace {

// Iterative refinement with residuals accumulated in extended precision. Two
// rounds bring the forward error of an LU solve down to about unit roundoff
// for any system the rcond guard lets through.
template <typename Lu>
void refine(const Matrix& a, const Lu& lu, const Matrix& b, Matrix& x) {
  using Ext = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const Ext a_ext = a.cast<long double>();
  const Ext b_ext = b.cast<long double>();
  for (int round = 0; round < 2; ++round) {
    const Matrix r = (b_ext - a_ext * x.cast<long double>()).cast<double>();
    const Matrix dx = lu.solve(r);
    x += dx;
  }
}

}  // namespace

Var solve(Var a, Var b) {
  same_graph("solve", a, b);
  if (a.rows() != a.cols()) {
    throw ShapeError("solve: matrix must be square, got " + shape_of(a));
  }
  if (a.rows() != b.rows()) shape_mismatch("solve", a, b);
  auto lu = std::make_shared<Eigen::PartialPivLU<Matrix>>(a.value());
  const double rcond = lu->rcond();
  if (!(rcond >= kSingularRcond)) {
    std::ostringstream os;
    os << "solve: matrix " << shape_of(a)
       << " is singular to working precision (rcond estimate " << rcond
       << ", threshold " << kSingularRcond << ")";
    throw SingularMatrixError(os.str(), rcond);
  }
  Matrix x = lu->solve(b.value());
  refine(a.value(), *lu, b.value(), x);
  if (!x.allFinite()) {
    throw SingularMatrixError("solve: non-finite solution", rcond);
  }
  return a.graph().push(
      "solve", std::move(x), {a, b},
      [a, b, lu](Graph& g, const Matrix& go, const Matrix& x) {
        const auto lu_t = lu->transpose();
        Matrix gb = lu_t.solve(go);
        refine(g.value(a).transpose(), lu_t, go, gb);
        if (g.needs_grad(a)) g.accumulate(a, -gb * x.transpose());
        g.accumulate(b, gb);
      });
}

Var concat_rows(Var a, Var b) {
  same_graph("concat_rows", a, b);
  if (a.cols() != b.cols()) shape_mismatch("concat_rows", a, b);
  Matrix out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a.value();
  out.bottomRows(b.rows()) = b.value();
  return a.graph().push(
      "concat_rows", std::move(out), {a, b},
      [a, b](Graph& g, const Matrix& go, const Matrix&) {
        g.accumulate(a, go.topRows(a.rows()));
        g.accumulate(b, go.bottomRows(b.rows()));
      });
}

// --- ParamSet ----------------------------------------------------------------

ParamTensor& ParamSet::add(std::string name, Matrix value, bool trainable) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
  params_.push_back({std::move(name), std::move(value), trainable});
  return params_.back();
}

const ParamTensor* ParamSet::find(std::string_view name) const {
  for (const ParamTensor& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const ParamTensor& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const ParamTensor& a = params_[i];
    const ParamTensor& b = other.params_[i];
    if (a.name != b.name || a.trainable != b.trainable ||
        a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
        a.value != b.value) {
      return false;
    }
  }
  return true;
}

std::vector<Var> bind(Graph& g, const ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const ParamTensor& p : params) {
    vars.push_back(p.trainable ? g.variable(p.value) : g.constant(p.value));
  }
  return vars;
}

std::vector<Matrix> gradients(const Graph& g, std::span<const Var> bound) {
  std::vector<Matrix> out;
  out.reserve(bound.size());
  for (const Var& v : bound) out.push_back(g.grad(v));
  return out;
}

// --- gradient check ----------------------------------------------------------

double check_gradients(const LossBuilder& build, std::vector<Matrix>& params,
                       double step) {
  auto evaluate = [&](bool with_grad, std::vector<Matrix>* grads) {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Matrix& p : params) vars.push_back(g.variable(p));
    Var loss = build(g, vars);
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      throw NonFiniteError("check_gradients: non-finite loss while probing");
    }
    if (with_grad) {
      g.backward(loss);
      *grads = gradients(g, vars);
    }
    return value;
  };

  std::vector<Matrix> analytic;
  evaluate(true, &analytic);

  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = params[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + step;
      const double up = evaluate(false, nullptr);
      p.data()[i] = saved - step;
      const double down = evaluate(false, nullptr);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::fabs(analytic[t].data()[i] - numeric) / (std::fabs(numeric) + 1e-8);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace gramnet
