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

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gramnet {
namespace {

Matrix to_ring_plane(const Matrix& samples, const RingSpec& spec) {
  if (samples.cols() == 2) return samples;
  if (samples.cols() == 3) {
    return rotate_axis2(samples, -spec.rotation_deg_axis2).leftCols(2);
  }
  throw ShapeError("mode_coverage: samples must have 2 or 3 columns, got " +
                   shape_str(samples.rows(), samples.cols()));
}

// Symmetric PSD square root by eigendecomposition.
Matrix psd_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -1e-8) {
    throw std::domain_error(std::string("frechet_distance: ") + what +
                            " is not positive semi-definite (eigenvalue " +
                            format_double(ev.minCoeff()) + ")");
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

ModeReport mode_coverage(const Matrix& samples, const RingSpec& spec, double min_frac,
                         double radius_stds) {
  spec.validate();
  const Matrix pts = to_ring_plane(samples, spec);
  const Matrix centers = spec.centers();
  ModeReport r;
  r.counts.assign(spec.n_modes, 0);
  r.total = static_cast<int>(pts.rows());
  r.capture_radius = radius_stds * spec.mode_std;
  r.min_frac = min_frac;
  double spread = 0.0;
  int close = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Eigen::Index k = 0;
    const double d2 = (centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&k);
    const double d = std::sqrt(d2);
    if (d <= r.capture_radius) {
      ++r.counts[k];
      ++close;
      spread += d;
    }
  }
  for (int c : r.counts) {
    if (r.total > 0 && c >= min_frac * r.total) ++r.modes_captured;
  }
  r.high_quality_fraction = r.total > 0 ? static_cast<double>(close) / r.total : 0.0;
  r.mean_spread = close > 0 ? spread / close : 0.0;
  return r;
}

GaussianFit gaussian_fit(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw std::invalid_argument("gaussian_fit: needs at least 2 samples");
  }
  GaussianFit f;
  f.n = samples.rows();
  f.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - f.mean.transpose();
  f.cov = centered.transpose() * centered / static_cast<double>(f.n - 1);
  return f;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows()) {
    throw ShapeError("frechet_distance: dimension " + std::to_string(a.mean.size()) +
                     " vs " + std::to_string(b.mean.size()));
  }
  const Matrix root_a = psd_sqrt(a.cov, "first covariance");
  psd_sqrt(b.cov, "second covariance");
  const Matrix middle = psd_sqrt(root_a * b.cov * root_a, "cross term");
  const double mean_term = (a.mean - b.mean).squaredNorm();
  return mean_term + a.cov.trace() + b.cov.trace() - 2.0 * middle.trace();
}

double held_out_mmd(const Matrix& data, const Matrix& generated, const KernelSpec& kernel) {
  return mmd2_biased(data, generated, kernel);
}

void to_json(nlohmann::json& j, const ModeReport& r) {
  j = nlohmann::json{{"counts", r.counts},
                     {"total", r.total},
                     {"modes_captured", r.modes_captured},
                     {"high_quality_fraction", r.high_quality_fraction},
                     {"mean_spread", r.mean_spread},
                     {"capture_radius", r.capture_radius},
                     {"min_frac", r.min_frac}};
}

void to_json(nlohmann::json& j, const GaussianFit& f) {
  j = nlohmann::json{{"n", f.n},
                     {"mean", std::vector<double>(f.mean.data(), f.mean.data() + f.mean.size())},
                     {"cov", std::vector<double>(f.cov.data(), f.cov.data() + f.cov.size())}};
}

}  // namespace gramnet
