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

// Kernel density-ratio estimation over projected samples and the critic
// objective built from it.
//
// With generated projections q_1..q_M and data projections p_1..p_N the ratio
// p/q at the generated points is estimated in closed form as
//
//   r_hat = (M / N) * (K_qq + ridge * I)^{-1} K_qp 1
//
// The critic maximizes the Pearson-divergence estimate mean((r_hat - 1)^2),
// either with the additive positivity term lambda * sum(r_hat) or with r_hat
// clipped at zero.

#ifndef GRAMNET_RATIO_H_
#define GRAMNET_RATIO_H_

#include <cstdint>

#include "gramnet/autodiff.h"
#include "gramnet/kernels.h"

namespace gramnet {

struct RatioEstimate {
  Var r_hat;  // M x 1
  double ridge = 0.0;
  // True when the M/N batch-size factor was applied.
  bool scale_corrected = true;
};

enum class PositivityMode { kPenalty, kClip };

struct CriticLossConfig {
  double lambda = 1.0;
  PositivityMode positivity = PositivityMode::kPenalty;
  double ridge = 1e-6;

  void validate() const;
  bool operator==(const CriticLossConfig&) const = default;
};

inline constexpr double kDefaultRidge = 1e-6;

// Throws ShapeError on non-conforming Grams and SingularMatrixError when the
// regularized system cannot be solved.
RatioEstimate estimate_ratio(Var k_qq, Var k_qp, double ridge = kDefaultRidge,
                             bool scale_correct = true);

// mean((r_hat - 1)^2).
Var pearson_divergence_estimate(const RatioEstimate& r);

// The quantity the critic ascends.
Var critic_loss(const RatioEstimate& r, const CriticLossConfig& cfg);

// --- change-of-variables check ----------------------------------------------

// x -> x W^T + b, W is K x D.
struct AffineMap {
  Matrix weight;
  Eigen::VectorXd bias;

  Matrix apply(const Matrix& x) const;
  static AffineMap identity(Eigen::Index dim);
  static AffineMap constant(Eigen::Index in_dim, const Eigen::VectorXd& value);
};

// Multivariate normal; the covariance may be singular.
struct GaussianDistribution {
  Eigen::VectorXd mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }
  Matrix sample(Eigen::Index n, std::uint64_t seed) const;
  // Law of f(x) for x drawn from this distribution.
  GaussianDistribution pushforward(const AffineMap& f) const;
};

struct LotusReport {
  double data_space = 0.0;       // mean of g(f(x)), x ~ q
  double projected_space = 0.0;  // mean of g(y), y ~ law of f(x)
  double discrepancy = 0.0;      // |data_space - projected_space|
};

struct LotusOptions {
  KernelSpec kernel;
  Eigen::Index reference_size = 200;
  double ridge = 1e-3;
};

// Compares E_{x~q}[g(f(x))] against E_{y~q_bar}[g(y)], where q_bar is sampled
// directly in the projected space and g = r^2 for the squared projected ratio.
// g is fixed once from a shared reference sample: r_hat from estimate_ratio at
// the projected reference points, extended to arbitrary y by kernel-weighted
// averaging of those values.
LotusReport lotus_consistency_check(const GaussianDistribution& p,
                                    const GaussianDistribution& q,
                                    const AffineMap& critic,
                                    Eigen::Index n_samples, std::uint64_t seed,
                                    const LotusOptions& options = {});

}  // namespace gramnet

#endif  // GRAMNET_RATIO_H_
