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

// Evaluation statistics: mode coverage on ring data, Gaussian fits and the
// Frechet distance between them, and held-out MMD.

#ifndef GRAMNET_METRICS_H_
#define GRAMNET_METRICS_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "gramnet/autodiff.h"
#include "gramnet/data.h"
#include "gramnet/kernels.h"

namespace gramnet {

struct ModeReport {
  // Samples within capture_radius of each center.
  std::vector<int> counts;
  int total = 0;
  int modes_captured = 0;
  // Fraction of samples within capture_radius of some center.
  double high_quality_fraction = 0.0;
  // Mean distance of captured samples to their center.
  double mean_spread = 0.0;
  double capture_radius = 0.0;
  double min_frac = 0.0;
};

// Each sample is assigned to its nearest center; a mode is captured when at
// least min_frac of all samples lie within radius_stds * mode_std of it.
// Three-column samples are mapped back into the ring plane first by undoing
// the ring rotation and dropping the third coordinate.
ModeReport mode_coverage(const Matrix& samples, const RingSpec& spec,
                         double min_frac = 0.02, double radius_stds = 3.0);

struct GaussianFit {
  Eigen::VectorXd mean;
  Matrix cov;  // unbiased
  Eigen::Index n = 0;
};

// Needs at least two rows.
GaussianFit gaussian_fit(const Matrix& samples);

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2). Throws
// ShapeError on dimension mismatch and std::domain_error when a covariance
// has an eigenvalue below -1e-8; smaller negative values are clamped.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

double held_out_mmd(const Matrix& data, const Matrix& generated,
                    const KernelSpec& kernel = {});

void to_json(nlohmann::json& j, const ModeReport& r);
void to_json(nlohmann::json& j, const GaussianFit& f);

}  // namespace gramnet

#endif  // GRAMNET_METRICS_H_
