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

#include "gramnet/random.h"

#include <cstring>
#include <limits>
#include <functional>
#include <cmath>

#include <gtest/gtest.h>

namespace gramnet {
namespace {

// Known-answer vectors published with the Random123 library.
TEST(PhiloxTest, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}),
            (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}),
            (PhiloxCounter{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  Rng a(42), b(42), c(42, 1), d(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    EXPECT_EQ(x, b.next_u32());
    (void)c;
  }
  Rng e(42);
  EXPECT_NE(e.next_u64(), c.next_u64());
  Rng f(42);
  EXPECT_NE(f.next_u64(), d.next_u64());
}

TEST(RngTest, UniformRangeAndMoments) {
  Rng rng(7);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sumsq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sumsq / n - 0.25, 1.0 / 12.0, 0.005);
}

TEST(RngTest, BelowStaysInRange) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(RngTest, DigestTracksPosition) {
  Rng a(1), b(1);
  EXPECT_EQ(a.digest(), b.digest());
  a.next_u32();
  EXPECT_NE(a.digest(), b.digest());
}

TEST(RngTest, SubstreamSeedsDiffer) {
  EXPECT_NE(substream_seed(1, 1, 0), substream_seed(1, 1, 1));
  EXPECT_NE(substream_seed(1, 1, 0), substream_seed(1, 2, 0));
  EXPECT_EQ(substream_seed(5, 3, 9), substream_seed(5, 3, 9));
}

}  // namespace
}  // namespace gramnet
