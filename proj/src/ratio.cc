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

#include "gramnet/ratio.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gramnet/random.h"
#include "gramnet/summation.h"

namespace gramnet {

void CriticLossConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("critic_loss: lambda must be >= 0");
  if (!(ridge >= 0.0)) throw std::invalid_argument("critic_loss: ridge must be >= 0");
}

RatioEstimate estimate_ratio(Var k_qq, Var k_qp, double ridge,
                             bool scale_correct) {
  const Eigen::Index m = k_qq.rows();
  if (k_qq.cols() != m || k_qp.rows() != m) {
    throw ShapeError("estimate_ratio: K_qq " +
                     shape_str(k_qq.rows(), k_qq.cols()) + " and K_qp " +
                     shape_str(k_qp.rows(), k_qp.cols()) + " do not conform");
  }
  if (!(ridge >= 0.0)) throw std::invalid_argument("estimate_ratio: ridge must be >= 0");
  const Eigen::Index n = k_qp.cols();

  Graph& g = k_qq.graph();
  Var system = k_qq;
  if (ridge > 0.0) {
    system = add(k_qq, g.constant(ridge * Matrix::Identity(m, m)));
  }
  Var r = solve(system, sum_rows(k_qp));
  if (scale_correct && m != n) {
    r = affine(r, static_cast<double>(m) / static_cast<double>(n));
  }
  return {r, ridge, scale_correct};
}

Var pearson_divergence_estimate(const RatioEstimate& r) {
  return mean(square(affine(r.r_hat, 1.0, -1.0)));
}

Var critic_loss(const RatioEstimate& r, const CriticLossConfig& cfg) {
  cfg.validate();
  if (cfg.positivity == PositivityMode::kClip) {
    return mean(square(affine(relu(r.r_hat), 1.0, -1.0)));
  }
  Var pd = pearson_divergence_estimate(r);
  return add(pd, affine(sum(r.r_hat), cfg.lambda));
}

// --- change-of-variables check ----------------------------------------------

Matrix AffineMap::apply(const Matrix& x) const {
  if (x.cols() != weight.cols()) {
    throw ShapeError("AffineMap: input " + shape_str(x.rows(), x.cols()) +
                     " vs weight " + shape_str(weight.rows(), weight.cols()));
  }
  Matrix y = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return y;
}

AffineMap AffineMap::identity(Eigen::Index dim) {
  return {Matrix::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

AffineMap AffineMap::constant(Eigen::Index in_dim, const Eigen::VectorXd& value) {
  return {Matrix::Zero(value.size(), in_dim), value};
}

Matrix GaussianDistribution::sample(Eigen::Index n, std::uint64_t seed) const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Eigen::VectorXd scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix factor = eig.eigenvectors() * scale.asDiagonal();
  Rng rng(seed);
  Matrix z(n, dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim(); ++j) z(i, j) = rng.normal();
  }
  Matrix x = z * factor.transpose();
  x.rowwise() += mean.transpose();
  return x;
}

GaussianDistribution GaussianDistribution::pushforward(const AffineMap& f) const {
  return {f.weight * mean + f.bias, f.weight * cov * f.weight.transpose()};
}

namespace {

// Kernel-weighted average of reference ratio values, squared.
class SquaredRatio {
 public:
  SquaredRatio(Matrix anchors, Eigen::VectorXd ratio, KernelSpec kernel)
      : anchors_(std::move(anchors)),
        ratio_(std::move(ratio)),
        kernel_(std::move(kernel)) {}

  Eigen::VectorXd operator()(const Matrix& y) const {
    const Matrix k = rbf_gram(y, anchors_, kernel_);
    Eigen::VectorXd out(y.rows());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double r = k.row(i).dot(ratio_) / k.row(i).sum();
      out(i) = r * r;
    }
    return out;
  }

 private:
  Matrix anchors_;
  Eigen::VectorXd ratio_;
  KernelSpec kernel_;
};

double mean_of(const Eigen::VectorXd& v) {
  return exact_sum(std::span<const double>(v.data(), v.size())) /
         static_cast<double>(v.size());
}

}  // namespace

LotusReport lotus_consistency_check(const GaussianDistribution& p,
                                    const GaussianDistribution& q,
                                    const AffineMap& critic,
                                    Eigen::Index n_samples, std::uint64_t seed,
                                    const LotusOptions& options) {
  if (p.dim() != q.dim() || critic.weight.cols() != q.dim()) {
    throw ShapeError("lotus_consistency_check: dimension mismatch");
  }
  const Eigen::Index ref = options.reference_size;
  const Matrix yq_ref = critic.apply(q.sample(ref, substream_seed(seed, 1, 0)));
  const Matrix yp_ref = critic.apply(p.sample(ref, substream_seed(seed, 1, 1)));

  Eigen::VectorXd r_ref;
  {
    Graph g;
    Var vq = g.constant(yq_ref);
    Var vp = g.constant(yp_ref);
    RatioEstimate r = estimate_ratio(rbf_gram(vq, vq, options.kernel),
                                     rbf_gram(vq, vp, options.kernel),
                                     options.ridge);
    r_ref = r.r_hat.value().col(0);
  }
  const SquaredRatio g(yq_ref, r_ref, options.kernel);

  LotusReport report;
  const Matrix x = q.sample(n_samples, substream_seed(seed, 2, 0));
  report.data_space = mean_of(g(critic.apply(x)));
  const Matrix y = q.pushforward(critic).sample(n_samples, substream_seed(seed, 3, 0));
  report.projected_space = mean_of(g(y));
  report.discrepancy = std::abs(report.data_space - report.projected_space);
  return report;
}

}  // namespace gramnet
