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

#include <stdexcept>
#include <string>

namespace gramnet {

void KernelSpec::validate() const {
  if (bandwidths.empty()) {
    throw std::invalid_argument("kernel: bandwidth list is empty");
  }
  for (double s : bandwidths) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("kernel: bandwidth must be > 0, got " +
                                  std::to_string(s));
    }
  }
}

Var rbf_gram(Var x, Var y, const KernelSpec& spec) {
  spec.validate();
  Var d2 = pairwise_sq_dist(x, y);
  Var k;
  for (double sigma : spec.bandwidths) {
    Var term = exp(affine(d2, -1.0 / (2.0 * sigma * sigma)));
    k = k.valid() ? add(k, term) : term;
  }
  return k;
}

GramPair gram_pair(Var generated, Var data, const KernelSpec& spec) {
  return {rbf_gram(generated, generated, spec), rbf_gram(generated, data, spec),
          rbf_gram(data, data, spec)};
}

Var mmd2_biased(Var k_xx, Var k_xy, Var k_yy) {
  const Eigen::Index n = k_xx.rows();
  const Eigen::Index m = k_yy.rows();
  if (k_xx.cols() != n || k_yy.cols() != m || k_xy.rows() != n ||
      k_xy.cols() != m) {
    throw ShapeError("mmd2_biased: inconsistent Gram shapes K_xx " +
                     shape_str(k_xx.rows(), k_xx.cols()) + ", K_xy " +
                     shape_str(k_xy.rows(), k_xy.cols()) + ", K_yy " +
                     shape_str(k_yy.rows(), k_yy.cols()));
  }
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  Var xx = affine(sum(k_xx), 1.0 / (nn * nn));
  Var xy = affine(sum(k_xy), -2.0 / (nn * mm));
  Var yy = affine(sum(k_yy), 1.0 / (mm * mm));
  return add(add(xx, xy), yy);
}

Var mmd2_biased(const GramPair& gram) {
  return mmd2_biased(gram.k_pp, transpose(gram.k_qp), gram.k_qq);
}

Matrix pairwise_sq_dist(const Matrix& x, const Matrix& y) {
  Graph g;
  return pairwise_sq_dist(g.constant(x), g.constant(y)).value();
}

Matrix rbf_gram(const Matrix& x, const Matrix& y, const KernelSpec& spec) {
  Graph g;
  return rbf_gram(g.constant(x), g.constant(y), spec).value();
}

double mmd2_biased(const Matrix& x, const Matrix& y, const KernelSpec& spec) {
  Graph g;
  Var vx = g.constant(x);
  Var vy = g.constant(y);
  return mmd2_biased(rbf_gram(vx, vx, spec), rbf_gram(vx, vy, spec),
                     rbf_gram(vy, vy, spec))
      .scalar();
}

}  // namespace gramnet
