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

// Gaussian (RBF) kernel mixtures, Gram matrices and the biased MMD^2
// statistic, all built as autodiff graph nodes.
//
// Kernel convention, used everywhere in the library:
//
//   k(x, y) = sum_b exp(-||x - y||^2 / (2 sigma_b^2))
//
// Mixtures are summed, not averaged, so k(x, x) equals the number of
// bandwidths. This scales every reported MMD value by the bandwidth count.

#ifndef GRAMNET_KERNELS_H_
#define GRAMNET_KERNELS_H_

#include <vector>

#include "gramnet/autodiff.h"

namespace gramnet {

struct KernelSpec {
  std::vector<double> bandwidths{1.0};

  // Throws std::invalid_argument if empty or any bandwidth is not > 0.
  void validate() const;
  double self_similarity() const { return static_cast<double>(bandwidths.size()); }
  bool operator==(const KernelSpec&) const = default;
};

// Gram matrices over projected samples: q = generated, p = data.
struct GramPair {
  Var k_qq;  // M x M
  Var k_qp;  // M x N
  Var k_pp;  // N x N
};

// Entry (i, j) = k(x_i, y_j).
Var rbf_gram(Var x, Var y, const KernelSpec& spec);

GramPair gram_pair(Var generated, Var data, const KernelSpec& spec);

// Biased (V-statistic) estimate
//   1/N^2 sum K_xx - 2/(NM) sum K_xy + 1/M^2 sum K_yy
// with K_xx N x N, K_xy N x M, K_yy M x M.
Var mmd2_biased(Var k_xx, Var k_xy, Var k_yy);

// Generator-side MMD^2 between data and generated samples on a GramPair.
Var mmd2_biased(const GramPair& gram);

// Eager helpers on plain arrays; same code path as the graph versions.
Matrix pairwise_sq_dist(const Matrix& x, const Matrix& y);
Matrix rbf_gram(const Matrix& x, const Matrix& y, const KernelSpec& spec);
double mmd2_biased(const Matrix& x, const Matrix& y, const KernelSpec& spec);

}  // namespace gramnet

#endif  // GRAMNET_KERNELS_H_
