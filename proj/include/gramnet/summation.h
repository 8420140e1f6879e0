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

#ifndef GRAMNET_SUMMATION_H_
#define GRAMNET_SUMMATION_H_

#include <span>

namespace gramnet {

// Correctly rounded sum of `values` (Shewchuk's non-overlapping partials).
// The result is independent of element order.
double exact_sum(std::span<const double> values);

}  // namespace gramnet

#endif  // GRAMNET_SUMMATION_H_
