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

// Synthetic ring datasets, generator noise, MNIST IDX ingestion and CSV
// export of sample arrays. All samplers are pure functions of their
// arguments: the same (spec, n, seed) always yields the same array.

#ifndef GRAMNET_DATA_H_
#define GRAMNET_DATA_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gramnet/autodiff.h"

namespace gramnet {

// Mixture of isotropic Gaussians with centers evenly spaced on a circle.
struct RingSpec {
  int n_modes = 8;
  double mode_std = 0.01;
  double radius = 1.0;
  // 3-D variant only: rotation about the second axis, degrees.
  double rotation_deg_axis2 = 0.0;
  // 3-D variant only: std of the appended third coordinate.
  double third_dim_std = 0.1;

  static RingSpec ring3d() {
    RingSpec s;
    s.rotation_deg_axis2 = 60.0;
    return s;
  }

  // Throws std::invalid_argument on non-positive counts or scales.
  void validate() const;
  // n_modes x 2 matrix; center k sits at angle 2*pi*k/n_modes.
  Matrix centers() const;
  bool operator==(const RingSpec&) const = default;
};

enum class NoiseFamily { kStandardGaussian, kUniformPm1 };

struct NoiseSpec {
  int dim = 2;
  NoiseFamily family = NoiseFamily::kStandardGaussian;

  void validate() const;
  bool operator==(const NoiseSpec&) const = default;
};

std::string_view to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(std::string_view s);

Matrix ring2d_sample(const RingSpec& spec, Eigen::Index n, std::uint64_t seed);

// ring2d rows with an N(0, third_dim_std^2) third coordinate appended, then
// rotated about axis 2 by rotation_deg_axis2 (see rotate_axis2).
Matrix ring3d_sample(const RingSpec& spec, Eigen::Index n, std::uint64_t seed);

// Right-handed rotation of 3-D rows about the second axis:
//   x' = x cos(a) + z sin(a),  y' = y,  z' = -x sin(a) + z cos(a).
Matrix rotate_axis2(const Matrix& points, double degrees);

Matrix noise_sample(const NoiseSpec& spec, Eigen::Index n, std::uint64_t seed);

// A data distribution: either an online sampler or a materialized array that
// is resampled uniformly with replacement.
class Dataset {
 public:
  using Sampler = std::function<Matrix(Eigen::Index n, std::uint64_t seed)>;

  Dataset(Eigen::Index dim, Sampler sampler);
  static Dataset ring2d(const RingSpec& spec);
  static Dataset ring3d(const RingSpec& spec);
  static Dataset from_rows(Matrix rows, std::vector<std::uint8_t> labels = {});

  Eigen::Index dim() const { return dim_; }
  Matrix sample(Eigen::Index n, std::uint64_t seed) const;
  // Present only for array-backed datasets.
  const Matrix* rows() const { return rows_ ? &*rows_ : nullptr; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

 private:
  Eigen::Index dim_;
  Sampler sampler_;
  std::optional<Matrix> rows_;
  std::vector<std::uint8_t> labels_;
};

// --- IDX (MNIST) ---------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 2051;  // 00 00 08 03
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;  // 00 00 08 01

class IdxError : public std::runtime_error {
 public:
  enum class Kind { kIo, kWrongMagic, kTruncated, kCountMismatch };
  IdxError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Rows are images flattened row-major and scaled by 1/255.
Dataset mnist_load(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path);

// --- CSV -------------------------------------------------------------------------

// Header row then one line per matrix row, every value printed with 17
// significant digits so it parses back to the identical double.
void write_csv(const std::filesystem::path& path, const Matrix& rows,
               const std::vector<std::string>& header);
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;

  // Index of a header field; throws std::out_of_range if absent.
  std::size_t column_index(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  // All columns parsed as numbers.
  Matrix numeric() const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace gramnet

#endif  // GRAMNET_DATA_H_
