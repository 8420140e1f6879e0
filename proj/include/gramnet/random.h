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

// Counter-based random streams.
//
// Every random draw in the library comes from Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3"), keyed by a 64-bit value
// derived from the user seed and a stream id:
//
//   key     = splitmix64(seed + 0x9E3779B97F4A7C15 * (stream + 1))
//   block_i = philox4x32_10(counter = i as 128-bit little-endian, key)
//
// Words are consumed in order block_0[0..3], block_1[0..3], ... Doubles take
// the top 53 bits of two consecutive words (first word high). Normals use the
// Box-Muller transform and consume pairs. Nothing here depends on the
// standard library's implementation-defined distributions, so streams are
// reproducible across platforms.

#ifndef GRAMNET_RANDOM_H_
#define GRAMNET_RANDOM_H_

#include <array>
#include <cstdint>
#include <optional>

namespace gramnet {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

// Seed for sub-stream `index` of purpose `stream` under a run seed.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index);

// Fixed stream ids used across the library.
enum class Stream : std::uint64_t {
  kData = 1,
  kNoise = 2,
  kInit = 3,
  kSnapshot = 4,
  kEval = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n), rejection-free multiply-shift (n < 2^32).
  std::uint32_t below(std::uint32_t n);
  double normal();

  // Hash of the key and position; identifies the stream state.
  std::uint64_t digest() const;

 private:
  void refill();

  PhiloxKey key_{};
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

}  // namespace gramnet

#endif  // GRAMNET_RANDOM_H_
