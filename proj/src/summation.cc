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

#include "gramnet/summation.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace gramnet {
namespace {

// Correctly rounded sum of a short list via non-overlapping partials.
double round_partials(const std::vector<double>& values) {
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  // Half-way case: nudge toward the sign of the remaining tail.
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) ||
                (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    const double yr = x - hi;
    if (y == yr) hi = x;
  }
  return hi;
}

// Every finite double is m * 2^(e - 1075) with integer |m| < 2^53 and
// e in [1, 2046]. Mantissas are added into one int64 bin per exponent and the
// bins are renormalized before they can overflow, so the accumulated value is
// exact and independent of the order of the inputs.
class Superaccumulator {
 public:
  void add(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    const int e = static_cast<int>((bits >> 52) & 0x7FF);
    std::int64_t m = static_cast<std::int64_t>(bits & ((std::uint64_t{1} << 52) - 1));
    if (e != 0) m |= std::int64_t{1} << 52;
    if (m == 0) return;
    if (bits >> 63) m = -m;
    bins_[e == 0 ? 1 : e] += m;
    if (++pending_ == kFlushEvery) normalize();
  }

  double value() {
    normalize();
    std::vector<double> terms;
    for (int i = kBins - 1; i >= 0; --i) {
      if (bins_[i] != 0) terms.push_back(std::ldexp(static_cast<double>(bins_[i]), i - 1075));
    }
    return round_partials(terms);
  }

 private:
  static constexpr int kBins = 2240;
  static constexpr int kShift = 32;
  // 2^9 additions of magnitude < 2^53 on top of a normalized bin stay < 2^63.
  static constexpr int kFlushEvery = 512;

  // Leaves |bin| < 2^32 everywhere below the top kShift bins. Truncating
  // division keeps each bin's sign, so carries never ripple past the data.
  void normalize() {
    for (int i = 0; i + kShift < kBins; ++i) {
      const std::int64_t carry = bins_[i] / (std::int64_t{1} << kShift);
      if (carry != 0) {
        bins_[i] -= carry * (std::int64_t{1} << kShift);
        bins_[i + kShift] += carry;
      }
    }
    pending_ = 0;
  }

  std::array<std::int64_t, kBins> bins_{};
  int pending_ = 0;
};

}  // namespace

double exact_sum(std::span<const double> values) {
  Superaccumulator acc;
  double special = 0.0;
  bool has_special = false;
  for (double x : values) {
    if (!std::isfinite(x)) {
      special += x;
      has_special = true;
      continue;
    }
    acc.add(x);
  }
  if (has_special) return special;
  return acc.value();
}

}  // namespace gramnet
