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

#include "gramnet/kernels.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <functional>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gramnet/random.h"
#include "oracles.h"
#include "test_util.h"

namespace gramnet {
namespace {

using testing::random_matrix;

Matrix permute_rows(const Matrix& m, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(m.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.below(static_cast<std::uint32_t>(i + 1))]);
  }
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

TEST(PairwiseSqDistTest, SinglePoint) {
  const Matrix x = random_matrix(1, 3, 1);
  EXPECT_EQ(pairwise_sq_dist(x, x)(0, 0), 0.0);
}

TEST(PairwiseSqDistTest, ThreeFourFive) {
  Matrix x(1, 2), y(1, 2);
  x << 0, 0;
  y << 3, 4;
  EXPECT_EQ(pairwise_sq_dist(x, y)(0, 0), 25.0);
}

TEST(PairwiseSqDistTest, MatchesDoubleLoop) {
  const Matrix x = random_matrix(5, 3, 2);
  const Matrix y = random_matrix(7, 3, 3);
  const Matrix d = pairwise_sq_dist(x, y);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 7; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += (x(i, k) - y(j, k)) * (x(i, k) - y(j, k));
      EXPECT_NEAR(d(i, j), s, 1e-12);
    }
  }
  EXPECT_THROW(pairwise_sq_dist(x, random_matrix(2, 2, 4)), ShapeError);
}

TEST(RbfGramTest, SelfSimilarityEqualsBandwidthCount) {
  const Matrix x = random_matrix(1, 2, 5);
  const KernelSpec spec{{0.1, 1, 10, 100}};
  EXPECT_DOUBLE_EQ(rbf_gram(x, x, spec)(0, 0), 4.0);
}

TEST(RbfGramTest, PlugIntoConvention) {
  Matrix x(1, 2), y(1, 2);
  x << 0, 0;
  y << 1, 1;  // squared distance 2
  EXPECT_NEAR(rbf_gram(x, y, KernelSpec{{1.0}})(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(rbf_gram(x, y, KernelSpec{{1.0}})(0, 0), 0.367879, 1e-6);
}

TEST(RbfGramTest, RejectsBadBandwidths) {
  const Matrix x = random_matrix(2, 2, 6);
  EXPECT_THROW(rbf_gram(x, x, KernelSpec{{}}), std::invalid_argument);
  EXPECT_THROW(rbf_gram(x, x, KernelSpec{{1.0, 0.0}}), std::invalid_argument);
}

TEST(RbfGramTest, SymmetricWithEntriesInRange) {
  const Matrix x = random_matrix(9, 2, 7);
  const KernelSpec spec{{0.5, 2.0}};
  const Matrix k = rbf_gram(x, x, spec);
  EXPECT_TRUE(k.isApprox(k.transpose(), 0.0));
  EXPECT_GT(k.minCoeff(), 0.0);
  EXPECT_LE(k.maxCoeff(), 2.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(RbfGramTest, GradientMatchesFiniteDifferences) {
  const Matrix y = random_matrix(4, 2, 8);
  const Matrix w = random_matrix(3, 4, 9);
  std::vector<Matrix> params = {random_matrix(3, 2, 10)};
  const KernelSpec spec{{0.7, 1.5}};
  const double err = check_gradients(
      [&](Graph& g, std::span<const Var> p) {
        return sum(mul(rbf_gram(p[0], g.constant(y), spec), g.constant(w)));
      },
      params);
  EXPECT_LT(err, 1e-6);
}

TEST(Mmd2Test, IdenticalSetsGiveZero) {
  const Matrix x = random_matrix(50, 3, 11);
  EXPECT_NEAR(mmd2_biased(x, x, KernelSpec{{1.0}}), 0.0, 1e-12);
}

TEST(Mmd2Test, DuplicatingSamplesLeavesStatisticUnchanged) {
  const Matrix x = random_matrix(30, 2, 12);
  const Matrix y = random_matrix(20, 2, 13, 1.5);
  Matrix x2(60, 2), y2(40, 2);
  x2 << x, x;
  y2 << y, y;
  const KernelSpec spec{{1.0, 2.0}};
  EXPECT_EQ(mmd2_biased(x, y, spec), mmd2_biased(x2, y2, spec));
}

TEST(Mmd2Test, PermutationIsBitExact) {
  const Matrix x = random_matrix(40, 2, 14);
  const Matrix y = random_matrix(35, 2, 15, 2.0);
  const KernelSpec spec{{1.0}};
  const double base = mmd2_biased(x, y, spec);
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_EQ(base, mmd2_biased(permute_rows(x, s), permute_rows(y, s + 100), spec));
  }
}

TEST(Mmd2Test, NonNegativeOnRandomInputs) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s, 5);
    const Matrix x = random_matrix(1 + rng.below(20), 3, s * 3, 0.01 + rng.uniform());
    const Matrix y = random_matrix(1 + rng.below(20), 3, s * 3 + 1);
    EXPECT_GE(mmd2_biased(x, y, KernelSpec{{0.1, 1.0}}), -1e-12);
  }
}

TEST(Mmd2Test, VanishesAsBandwidthGrows) {
  const Matrix x = random_matrix(40, 2, 16);
  const Matrix y = random_matrix(40, 2, 17, 3.0);
  double prev = std::numeric_limits<double>::infinity();
  const double first = mmd2_biased(x, y, KernelSpec{{1.0}});
  for (double sigma : {1.0, 10.0, 100.0, 1000.0}) {
    const double v = mmd2_biased(x, y, KernelSpec{{sigma}});
    EXPECT_LT(v, prev) << "sigma " << sigma;
    prev = v;
  }
  EXPECT_LT(prev, 1e-4 * first);
}

TEST(Mmd2Test, RejectsInconsistentShapes) {
  Graph g;
  Var a = g.constant(Matrix::Ones(3, 3));
  Var b = g.constant(Matrix::Ones(3, 2));
  Var c = g.constant(Matrix::Ones(3, 3));
  EXPECT_THROW(mmd2_biased(a, b, c), ShapeError);
}

TEST(Mmd2Test, ClosedFormExpectationMatchesQuadrature) {
  for (double mu : {0.0, 0.5, 1.0, 2.0}) {
    for (double sigma : {0.5, 1.0, 3.0}) {
      EXPECT_NEAR(oracle::expected_rbf(0, 1, mu, 1, sigma),
                  oracle::expected_rbf_quadrature(0, 1, mu, 1, sigma), 1e-10);
    }
  }
  // 2/sqrt(3) (1 - exp(-1/6)) for N(0,1) vs N(1,1), sigma = 1.
  EXPECT_NEAR(oracle::population_mmd2(0, 1, 1, 1, 1),
              2 / std::sqrt(3.0) * (1 - std::exp(-1.0 / 6)), 1e-15);
}

TEST(Mmd2Test, GaussianPairAgreesWithAnalyticValue) {
  // Reduced-size version of the acceptance check (2000 samples, 10 reps).
  const int n = 2000;
  const KernelSpec spec{{1.0}};
  std::vector<double> reps;
  for (std::uint64_t r = 0; r < 10; ++r) {
    Matrix x = random_matrix(n, 1, 1000 + r);
    Matrix y = (random_matrix(n, 1, 2000 + r).array() + 1.0).matrix();
    reps.push_back(mmd2_biased(x, y, spec));
  }
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / reps.size();
  double ss = 0;
  for (double v : reps) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps.size() - 1)) / std::sqrt(reps.size());
  const double expected = oracle::expected_mmd2_biased(0, 1, 1, 1, 1, n, n);
  EXPECT_LT(std::fabs(mean - expected), 3 * se);
}

TEST(GramPairTest, GeneratorLossUsesAllThreeBlocks) {
  Graph g;
  Var q = g.constant(random_matrix(6, 2, 20));
  Var p = g.constant(random_matrix(4, 2, 21));
  const KernelSpec spec{{1.0}};
  const GramPair gram = gram_pair(q, p, spec);
  EXPECT_EQ(gram.k_qq.rows(), 6);
  EXPECT_EQ(gram.k_qp.cols(), 4);
  EXPECT_EQ(gram.k_pp.rows(), 4);
  EXPECT_EQ(mmd2_biased(gram).scalar(), mmd2_biased(p.value(), q.value(), spec));
}

}  // namespace
}  // namespace gramnet
