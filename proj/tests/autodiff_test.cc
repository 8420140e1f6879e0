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

#include <cstring>
#include <limits>
#include <functional>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"

namespace gramnet {
namespace {

using testing::random_matrix;

// Central differences of a scalar function of one matrix, entry by entry.
Matrix finite_difference(const std::function<double(const Matrix&)>& f,
                         Matrix at, double step) {
  Matrix out(at.rows(), at.cols());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    const double saved = at.data()[i];
    at.data()[i] = saved + step;
    const double up = f(at);
    at.data()[i] = saved - step;
    const double down = f(at);
    at.data()[i] = saved;
    out.data()[i] = (up - down) / (2 * step);
  }
  return out;
}

TEST(AutodiffTest, ReluFlatRegion) {
  Graph g;
  Var x = g.variable(Matrix::Constant(1, 1, -1.0));
  Var y = relu(x);
  EXPECT_EQ(y.scalar(), 0.0);
  g.backward(y);
  EXPECT_EQ(x.grad()(0, 0), 0.0);
}

TEST(AutodiffTest, SquareByProduct) {
  Graph g;
  Var x = g.variable(Matrix::Constant(1, 1, 3.0));
  Var y = x * x;
  g.backward(y);
  EXPECT_DOUBLE_EQ(y.scalar(), 9.0);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 6.0);
}

TEST(AutodiffTest, SolveGradientMatchesFiniteDifferences) {
  const Matrix a0 = 3.0 * Matrix::Identity(3, 3) + 0.5 * random_matrix(3, 3, 1);
  const Matrix b = random_matrix(3, 1, 2);
  Graph g;
  Var a = g.variable(a0);
  Var loss = sum(solve(a, g.constant(b)));
  g.backward(loss);
  const Matrix fd = finite_difference(
      [&](const Matrix& m) {
        Graph h;
        return sum(solve(h.constant(m), h.constant(b))).scalar();
      },
      a0, 1e-5);
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    const double rel =
        std::fabs(a.grad().data()[i] - fd.data()[i]) / std::fabs(fd.data()[i]);
    EXPECT_LT(rel, 1e-6) << "entry " << i;
  }
}

TEST(AutodiffTest, ConstantRootGivesZeroGradients) {
  Graph g;
  Var w = g.variable(random_matrix(2, 2, 3));
  Var c = g.scalar(4.0);
  g.backward(c);
  EXPECT_TRUE(w.grad().isZero(0.0));
}

TEST(AutodiffTest, UnreachableParameterHasZeroGradient) {
  Graph g;
  Var used = g.variable(random_matrix(2, 2, 4));
  Var unused = g.variable(random_matrix(2, 2, 5));
  Var loss = sum(used);
  Var other = sum(unused);
  g.backward(other);
  g.backward(loss);
  EXPECT_TRUE(unused.grad().isZero(0.0));
  EXPECT_TRUE(used.grad().isApprox(Matrix::Ones(2, 2)));
}

TEST(AutodiffTest, MeanOfLinearMap) {
  const Matrix w0 = random_matrix(4, 3, 6);
  const Matrix x0 = random_matrix(3, 1, 7);
  Graph g;
  Var w = g.variable(w0);
  Var loss = mean(matmul(w, g.constant(x0)));
  g.backward(loss);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      EXPECT_NEAR(w.grad()(r, c), x0(c, 0) / 4.0, 1e-15);
    }
  }
}

TEST(AutodiffTest, NonScalarRootIsRejected) {
  Graph g;
  Var x = g.variable(Matrix::Ones(2, 1));
  EXPECT_THROW(g.backward(x), std::invalid_argument);
}

TEST(AutodiffTest, ShapeErrorNamesPrimitiveAndShapes) {
  Graph g;
  Var a = g.constant(Matrix::Ones(2, 3));
  Var b = g.constant(Matrix::Ones(4, 5));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[4x5]"), std::string::npos);
  }
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(pairwise_sq_dist(a, b), ShapeError);
  EXPECT_THROW(solve(a, b), ShapeError);
}

TEST(AutodiffTest, SingularSolveCarriesConditionEstimate) {
  Graph g;
  Matrix a(2, 2);
  a << 1, 2, 2, 4;
  try {
    solve(g.constant(a), g.constant(Matrix::Ones(2, 1)));
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_LT(e.rcond(), kSingularRcond);
    EXPECT_NE(std::string(e.what()).find("rcond"), std::string::npos);
  }
}

TEST(AutodiffTest, BroadcastRowAndColumnVectors) {
  Graph g;
  Var m = g.variable(random_matrix(3, 4, 8));
  Var row = g.variable(random_matrix(1, 4, 9));
  Var col = g.variable(random_matrix(3, 1, 10));
  Var out = sum(mul(add(m, row), col));
  g.backward(out);
  // d/d row_j = sum_i col_i, d/d col_i = sum_j (m_ij + row_j).
  const Matrix col_sum = Matrix::Constant(1, 4, col.value().sum());
  EXPECT_TRUE(row.grad().isApprox(col_sum, 1e-14));
  const Matrix expect_col = (m.value().rowwise() + row.value().row(0)).rowwise().sum();
  EXPECT_TRUE(col.grad().isApprox(expect_col, 1e-14));
}

TEST(AutodiffTest, QuadraticCheckIsExact) {
  std::vector<Matrix> params = {random_matrix(3, 2, 11)};
  const double err = check_gradients(
      [](Graph&, std::span<const Var> p) { return sum(square(p[0])); }, params);
  EXPECT_LT(err, 1e-9);
}

TEST(AutodiffTest, CheckGradientsRejectsNonFiniteLoss) {
  std::vector<Matrix> params = {Matrix::Zero(1, 1)};
  EXPECT_THROW(check_gradients(
                   [](Graph&, std::span<const Var> p) { return sum(log(p[0])); },
                   params),
               NonFiniteError);
}

// Composite loss touching every primitive.
Var composite_loss(Graph& g, std::span<const Var> p) {
  Var a = p[0];  // n x d
  Var b = p[1];  // m x d
  Var w = p[2];  // d x d
  Var row = p[3];
  Var h = add(matmul(a, w), row);
  Var t = tanh(h) + sigmoid(h) * relu(affine(h, 0.7, 0.1));
  Var d = pairwise_sq_dist(t, b);
  Var k = exp(neg(affine(d, 0.25)));
  Var s = sum_rows(k) / affine(sum_cols(exp(affine(h, 0.1))), 1.0, 1.0);
  Var gram = add(matmul(transpose(w), w), g.constant(Matrix::Identity(w.rows(), w.rows())));
  Var x = solve(gram, transpose(concat_rows(row, row)));
  Var ls = log_sigmoid(affine(b, 0.5));
  return add(add(mean(s), sum(square(x))), add(mean(ls), log(affine(sum(k), 1.0, 1.0))));
}

TEST(AutodiffTest, RandomCompositeGradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 77);
    const Eigen::Index d = 1 + rng.below(8);
    const Eigen::Index n = 1 + rng.below(16);
    const Eigen::Index m = 1 + rng.below(16);
    std::vector<Matrix> params = {random_matrix(n, d, seed * 10 + 1),
                                  random_matrix(m, d, seed * 10 + 2),
                                  random_matrix(d, d, seed * 10 + 3, 0.5),
                                  random_matrix(1, d, seed * 10 + 4)};
    const double err = check_gradients(composite_loss, params, 1e-5);
    EXPECT_LT(err, 1e-4) << "seed " << seed << " d=" << d << " n=" << n;
  }
}

TEST(AutodiffTest, SolveAdjointIdentity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::Index n = 4;
    const Matrix a0 = 4.0 * Matrix::Identity(n, n) + random_matrix(n, n, seed + 100);
    const Matrix b0 = random_matrix(n, 2, seed + 200);
    const Matrix weights = random_matrix(n, 2, seed + 300);
    const Matrix da = random_matrix(n, n, seed + 400);
    const Matrix db = random_matrix(n, 2, seed + 500);
    auto value = [&](const Matrix& a, const Matrix& b) {
      Graph g;
      return sum(solve(g.constant(a), g.constant(b)) * g.constant(weights)).scalar();
    };
    Graph g;
    Var a = g.variable(a0);
    Var b = g.variable(b0);
    g.backward(sum(solve(a, b) * g.constant(weights)));
    const double directional =
        (a.grad().array() * da.array()).sum() + (b.grad().array() * db.array()).sum();
    const double h = 1e-5;
    const double fd =
        (value(a0 + h * da, b0 + h * db) - value(a0 - h * da, b0 - h * db)) / (2 * h);
    EXPECT_NEAR(directional, fd, 1e-7 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(AutodiffTest, RepeatedPassesAreBitIdentical) {
  std::vector<Matrix> params = {random_matrix(5, 3, 21), random_matrix(7, 3, 22),
                                random_matrix(3, 3, 23, 0.5), random_matrix(1, 3, 24)};
  auto run = [&] {
    Graph g;
    std::vector<Var> vars;
    for (const Matrix& p : params) vars.push_back(g.variable(p));
    g.backward(composite_loss(g, vars));
    return gradients(g, vars);
  };
  const auto first = run();
  const auto second = run();
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(0, std::memcmp(first[i].data(), second[i].data(),
                             sizeof(double) * first[i].size()));
  }
}

TEST(ParamSetTest, NamesAreUnique) {
  ParamSet p;
  p.add("w", Matrix::Zero(2, 2));
  EXPECT_THROW(p.add("w", Matrix::Zero(1, 1)), std::invalid_argument);
  EXPECT_EQ(p.count(), 4u);
  ASSERT_NE(p.find("w"), nullptr);
  EXPECT_EQ(p.find("b"), nullptr);
}

TEST(ParamSetTest, FrozenParametersBindAsConstants) {
  ParamSet p;
  p.add("w", Matrix::Ones(1, 1));
  p.add("frozen", Matrix::Ones(1, 1), false);
  Graph g;
  auto vars = bind(g, p);
  g.backward(sum(vars[0] * vars[1]));
  EXPECT_EQ(vars[0].grad()(0, 0), 1.0);
  EXPECT_EQ(vars[1].grad()(0, 0), 0.0);
}

}  // namespace
}  // namespace gramnet
