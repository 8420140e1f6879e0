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

#include "gramnet/metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "gramnet/random.h"
#include "test_util.h"

namespace gramnet {
namespace {

using testing::random_matrix;

Matrix repeated_centers(const RingSpec& spec, int copies) {
  const Matrix c = spec.centers();
  Matrix out(c.rows() * copies, 2);
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    for (int i = 0; i < copies; ++i) out.row(k * copies + i) = c.row(k);
  }
  return out;
}

TEST(ModeCoverage, ExactCentersCaptureEveryMode) {
  const RingSpec spec;
  const ModeReport r = mode_coverage(repeated_centers(spec, 100), spec);
  EXPECT_EQ(r.modes_captured, 8);
  EXPECT_DOUBLE_EQ(r.high_quality_fraction, 1.0);
  EXPECT_EQ(r.total, 800);
  for (int c : r.counts) EXPECT_EQ(c, 100);
  EXPECT_DOUBLE_EQ(r.mean_spread, 0.0);
}

TEST(ModeCoverage, CollapsedSamplesCaptureOneMode) {
  const RingSpec spec;
  Matrix x(500, 2);
  x.rowwise() = spec.centers().row(3);
  const ModeReport r = mode_coverage(x, spec);
  EXPECT_EQ(r.modes_captured, 1);
  EXPECT_EQ(r.counts[3], 500);
}

TEST(ModeCoverage, UniformCircleMatchesArcLengthRatio) {
  const RingSpec spec;
  // A point at angle t from a center is 2 sin(t/2) away from it.
  const double half_arc = 2.0 * std::asin(3.0 * spec.mode_std / 2.0);
  const double expected = spec.n_modes * 2.0 * half_arc / (2.0 * std::numbers::pi);
  Rng rng(7, 0);
  Matrix x(10000, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
  }
  const ModeReport r = mode_coverage(x, spec);
  EXPECT_NEAR(expected, 0.0764, 1e-3);
  EXPECT_NEAR(r.high_quality_fraction, expected, 0.01);
}

TEST(ModeCoverage, ThresholdAndCountsInvariants) {
  const RingSpec spec;
  Matrix x = ring2d_sample(spec, 1000, 3);
  // Leave only 10 samples (1%) near mode 0.
  int kept = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if ((x.row(i) - spec.centers().row(0)).norm() < 0.05 && kept++ >= 10) {
      x.row(i) << 5.0, 5.0;
    }
  }
  const ModeReport r = mode_coverage(x, spec);
  EXPECT_EQ(r.counts[0], 10);
  EXPECT_EQ(r.modes_captured, 7);
  EXPECT_LE(std::accumulate(r.counts.begin(), r.counts.end(), 0), r.total);
  EXPECT_EQ(mode_coverage(x, spec, 0.005).modes_captured, 8);
}

TEST(ModeCoverage, PermutationInvariant) {
  const RingSpec spec;
  const Matrix x = ring2d_sample(spec, 600, 11);
  std::vector<int> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::rotate(order.begin(), order.begin() + 217, order.end());
  Matrix y(x.rows(), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = x.row(order[i]);
  const ModeReport a = mode_coverage(x, spec);
  const ModeReport b = mode_coverage(y, spec);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.modes_captured, b.modes_captured);
  EXPECT_DOUBLE_EQ(a.high_quality_fraction, b.high_quality_fraction);
  EXPECT_NEAR(a.mean_spread, b.mean_spread, 1e-15);
}

TEST(ModeCoverage, ThreeDimensionalRingIsUnrotated) {
  const RingSpec spec = RingSpec::ring3d();
  const ModeReport r = mode_coverage(ring3d_sample(spec, 2000, 5), spec);
  EXPECT_EQ(r.modes_captured, 8);
  EXPECT_GT(r.high_quality_fraction, 0.95);
}

TEST(GaussianFit, RepeatedPointHasZeroCovariance) {
  Matrix x(20, 3);
  x.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
  const GaussianFit f = gaussian_fit(x);
  EXPECT_EQ(f.n, 20);
  EXPECT_NEAR((f.mean - Eigen::Vector3d(1.0, -2.0, 0.5)).norm(), 0.0, 1e-15);
  EXPECT_EQ(f.cov.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GaussianFit, TwoPointsMatchUnbiasedFormula) {
  Matrix x(2, 2);
  x << 1.0, 2.0, 4.0, -2.0;
  const GaussianFit f = gaussian_fit(x);
  const Eigen::Vector2d d(3.0, -4.0);
  // Each point is d/2 from the mean; sum of outer products over n - 1 = 1.
  const Matrix expected = d * d.transpose() / 2.0;
  EXPECT_LT((f.cov - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(gaussian_fit(x.topRows(1)), std::invalid_argument);
}

TEST(GaussianFit, StandardNormalMillionDraws) {
  const Matrix x = random_matrix(1000000, 2, 21);
  const GaussianFit f = gaussian_fit(x);
  EXPECT_LT(f.mean.norm(), 0.01);
  EXPECT_LT((f.cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((f.cov - f.cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

GaussianFit fit_of(Eigen::VectorXd mean, Matrix cov) {
  GaussianFit f;
  f.mean = std::move(mean);
  f.cov = std::move(cov);
  f.n = 100;
  return f;
}

TEST(Frechet, IdenticalFitsGiveZero) {
  const GaussianFit f = gaussian_fit(random_matrix(300, 3, 4));
  EXPECT_NEAR(frechet_distance(f, f), 0.0, 1e-9);
}

TEST(Frechet, EqualCovarianceMeanShift) {
  const GaussianFit a = gaussian_fit(random_matrix(300, 3, 5));
  GaussianFit b = a;
  const Eigen::Vector3d d(0.3, -1.2, 2.0);
  b.mean += d;
  EXPECT_NEAR(frechet_distance(a, b), d.squaredNorm(), 1e-9);
}

TEST(Frechet, OneDimensionalClosedForm) {
  const double m1 = 0.7, s1 = 1.3, m2 = -0.4, s2 = 0.25;
  const GaussianFit a = fit_of(Eigen::VectorXd::Constant(1, m1), Matrix::Constant(1, 1, s1 * s1));
  const GaussianFit b = fit_of(Eigen::VectorXd::Constant(1, m2), Matrix::Constant(1, 1, s2 * s2));
  const double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
  EXPECT_NEAR(frechet_distance(a, b), expected, 1e-9);
}

TEST(Frechet, SymmetricOnRandomFits) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const GaussianFit a = gaussian_fit(random_matrix(50, 4, 100 + s));
    const GaussianFit b = gaussian_fit(random_matrix(80, 4, 200 + s, 2.0));
    EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-9);
    EXPECT_GT(frechet_distance(a, b), 0.0);
  }
}

TEST(Frechet, CommutingCovariancesClosedForm) {
  // Diagonal covariances commute, so the trace term is sum (sa - sb)^2.
  const Eigen::Vector2d va(4.0, 0.25), vb(1.0, 9.0);
  const GaussianFit a = fit_of(Eigen::Vector2d::Zero(), va.asDiagonal().toDenseMatrix());
  const GaussianFit b = fit_of(Eigen::Vector2d::Zero(), vb.asDiagonal().toDenseMatrix());
  const double expected = std::pow(2.0 - 1.0, 2) + std::pow(0.5 - 3.0, 2);
  EXPECT_NEAR(frechet_distance(a, b), expected, 1e-9);
}

TEST(Frechet, RejectsMismatchAndIndefinite) {
  const GaussianFit a = fit_of(Eigen::Vector2d::Zero(), Matrix::Identity(2, 2));
  const GaussianFit c = fit_of(Eigen::Vector3d::Zero(), Matrix::Identity(3, 3));
  EXPECT_THROW(frechet_distance(a, c), ShapeError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -0.5;
  EXPECT_THROW(frechet_distance(a, fit_of(Eigen::Vector2d::Zero(), bad)), std::domain_error);
  Matrix tiny = Matrix::Identity(2, 2);
  tiny(1, 1) = -1e-12;
  EXPECT_NO_THROW(frechet_distance(a, fit_of(Eigen::Vector2d::Zero(), tiny)));
}

TEST(HeldOutMmd, IdenticalSetsAndDelegation) {
  const Matrix x = random_matrix(100, 2, 8);
  const Matrix y = random_matrix(120, 2, 9);
  EXPECT_NEAR(held_out_mmd(x, x), 0.0, 1e-15);
  EXPECT_EQ(held_out_mmd(x, y), mmd2_biased(y, x, KernelSpec{}));
}

TEST(HeldOutMmd, FarApartBoundedByTwiceBandwidthCount) {
  const KernelSpec kernel;
  const Matrix x = random_matrix(200, 2, 10);
  Matrix y = random_matrix(200, 2, 11);
  y.col(0).array() += 50.0;
  const double v = held_out_mmd(x, y, kernel);
  const double b = static_cast<double>(kernel.bandwidths.size());
  EXPECT_LE(v, 2.0 * b);
  EXPECT_GT(v, 0.0);
}

TEST(MetricsJson, ReportFields) {
  const RingSpec spec;
  nlohmann::json j = mode_coverage(repeated_centers(spec, 10), spec);
  EXPECT_EQ(j["modes_captured"], 8);
  EXPECT_EQ(j["counts"].size(), 8u);
  nlohmann::json f = gaussian_fit(random_matrix(10, 2, 1));
  EXPECT_EQ(f["mean"].size(), 2u);
  EXPECT_EQ(f["cov"].size(), 4u);
}

}  // namespace
}  // namespace gramnet
