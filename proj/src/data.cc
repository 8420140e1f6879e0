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

#include "gramnet/data.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "gramnet/random.h"

namespace gramnet {

namespace {

// Stream id for the appended third ring coordinate.
constexpr std::uint64_t kThirdDimStream = 0x3D;

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t at) {
  return (static_cast<std::uint32_t>(buf[at]) << 24) |
         (static_cast<std::uint32_t>(buf[at + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[at + 2]) << 8) |
         static_cast<std::uint32_t>(buf[at + 3]);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IdxError(IdxError::Kind::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_magic(const std::vector<unsigned char>& buf,
                 const std::filesystem::path& path, std::uint32_t expected) {
  if (buf.size() < 4) {
    throw IdxError(IdxError::Kind::kTruncated,
                   path.string() + ": truncated header");
  }
  const std::uint32_t magic = read_be32(buf, 0);
  if (magic != expected) {
    throw IdxError(IdxError::Kind::kWrongMagic,
                   path.string() + ": wrong magic " + std::to_string(magic) +
                       " (expected " + std::to_string(expected) + ")");
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace

void RingSpec::validate() const {
  if (n_modes < 1) throw std::invalid_argument("ring: n_modes must be >= 1");
  if (!(mode_std > 0.0)) throw std::invalid_argument("ring: mode_std must be > 0");
  if (!(radius > 0.0)) throw std::invalid_argument("ring: radius must be > 0");
  if (!(third_dim_std > 0.0)) {
    throw std::invalid_argument("ring: third_dim_std must be > 0");
  }
}

Matrix RingSpec::centers() const {
  Matrix c(n_modes, 2);
  for (int k = 0; k < n_modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n_modes;
    c(k, 0) = radius * std::cos(angle);
    c(k, 1) = radius * std::sin(angle);
  }
  return c;
}

std::string_view to_string(NoiseFamily f) {
  return f == NoiseFamily::kUniformPm1 ? "uniform" : "gaussian";
}

NoiseFamily noise_family_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseFamily::kStandardGaussian;
  if (s == "uniform") return NoiseFamily::kUniformPm1;
  throw std::invalid_argument("unknown noise family '" + std::string(s) + "'");
}

void NoiseSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("noise: dim must be >= 1");
}

Matrix ring2d_sample(const RingSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  const Matrix centers = spec.centers();
  Rng rng(seed);
  Matrix out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(
        rng.below(static_cast<std::uint32_t>(spec.n_modes)));
    const double dx = rng.normal();
    const double dy = rng.normal();
    out(i, 0) = centers(k, 0) + spec.mode_std * dx;
    out(i, 1) = centers(k, 1) + spec.mode_std * dy;
  }
  return out;
}

Matrix rotate_axis2(const Matrix& points, double degrees) {
  if (points.cols() != 3) {
    throw ShapeError("rotate_axis2: expected 3 columns, got " +
                     shape_str(points.rows(), points.cols()));
  }
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  Matrix out(points.rows(), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double x = points(i, 0), y = points(i, 1), z = points(i, 2);
    out(i, 0) = x * c + z * s;
    out(i, 1) = y;
    out(i, 2) = -x * s + z * c;
  }
  return out;
}

Matrix ring3d_sample(const RingSpec& spec, Eigen::Index n, std::uint64_t seed) {
  const Matrix flat = ring2d_sample(spec, n, seed);
  Rng rng(seed, kThirdDimStream);
  Matrix lifted(n, 3);
  lifted.leftCols(2) = flat;
  for (Eigen::Index i = 0; i < n; ++i) {
    lifted(i, 2) = spec.third_dim_std * rng.normal();
  }
  return rotate_axis2(lifted, spec.rotation_deg_axis2);
}

Matrix noise_sample(const NoiseSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Matrix out(n, spec.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < spec.dim; ++j) {
      out(i, j) = spec.family == NoiseFamily::kStandardGaussian
                      ? rng.normal()
                      : rng.uniform(-1.0, 1.0);
    }
  }
  return out;
}

// --- Dataset -------------------------------------------------------------------

Dataset::Dataset(Eigen::Index dim, Sampler sampler)
    : dim_(dim), sampler_(std::move(sampler)) {}

Dataset Dataset::ring2d(const RingSpec& spec) {
  spec.validate();
  return Dataset(2, [spec](Eigen::Index n, std::uint64_t seed) {
    return ring2d_sample(spec, n, seed);
  });
}

Dataset Dataset::ring3d(const RingSpec& spec) {
  spec.validate();
  return Dataset(3, [spec](Eigen::Index n, std::uint64_t seed) {
    return ring3d_sample(spec, n, seed);
  });
}

Dataset Dataset::from_rows(Matrix rows, std::vector<std::uint8_t> labels) {
  if (rows.rows() == 0) throw std::invalid_argument("dataset: no rows");
  const Eigen::Index dim = rows.cols();
  Dataset d(dim, nullptr);
  d.rows_ = std::move(rows);
  d.labels_ = std::move(labels);
  return d;
}

Matrix Dataset::sample(Eigen::Index n, std::uint64_t seed) const {
  if (!rows_) return sampler_(n, seed);
  Rng rng(seed);
  Matrix out(n, dim_);
  const auto count = static_cast<std::uint32_t>(rows_->rows());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = rows_->row(rng.below(count));
  return out;
}

// --- IDX -----------------------------------------------------------------------

Dataset mnist_load(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path) {
  const std::vector<unsigned char> img = read_file(images_path);
  check_magic(img, images_path, kIdxImagesMagic);
  if (img.size() < 16) {
    throw IdxError(IdxError::Kind::kTruncated,
                   images_path.string() + ": truncated header");
  }
  const std::size_t count = read_be32(img, 4);
  const std::size_t height = read_be32(img, 8);
  const std::size_t width = read_be32(img, 12);
  const std::size_t pixels = height * width;
  if (img.size() < 16 + count * pixels) {
    throw IdxError(IdxError::Kind::kTruncated,
                   images_path.string() + ": truncated payload (" +
                       std::to_string(img.size() - 16) + " of " +
                       std::to_string(count * pixels) + " bytes)");
  }

  const std::vector<unsigned char> lab = read_file(labels_path);
  check_magic(lab, labels_path, kIdxLabelsMagic);
  if (lab.size() < 8) {
    throw IdxError(IdxError::Kind::kTruncated,
                   labels_path.string() + ": truncated header");
  }
  const std::size_t label_count = read_be32(lab, 4);
  if (label_count != count) {
    throw IdxError(IdxError::Kind::kCountMismatch,
                   "count mismatch: " + std::to_string(count) + " images vs " +
                       std::to_string(label_count) + " labels");
  }
  if (lab.size() < 8 + label_count) {
    throw IdxError(IdxError::Kind::kTruncated,
                   labels_path.string() + ": truncated payload");
  }

  Matrix rows(static_cast<Eigen::Index>(count),
              static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          img[16 + i * pixels + p] / 255.0;
    }
  }
  std::vector<std::uint8_t> labels(lab.begin() + 8, lab.begin() + 8 + count);
  return Dataset::from_rows(std::move(rows), std::move(labels));
}

// --- CSV -----------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const Matrix& rows,
               const std::vector<std::string>& header) {
  if (static_cast<Eigen::Index>(header.size()) != rows.cols()) {
    throw ShapeError("write_csv: " + std::to_string(header.size()) +
                     " header fields for " + std::to_string(rows.cols()) +
                     " columns");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      out << (j ? "," : "") << format_double(rows(i, j));
    }
    out << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": missing header row");
  }
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(t.cells.size() + 2) + " has " +
                               std::to_string(fields.size()) + " fields");
    }
    t.cells.push_back(std::move(fields));
  }
  return t;
}

std::size_t CsvTable::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw std::out_of_range("csv: no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::column(std::string_view name) const {
  const std::size_t j = column_index(name);
  std::vector<double> out;
  out.reserve(cells.size());
  for (const auto& row : cells) out.push_back(parse_double(row[j]));
  return out;
}

Matrix CsvTable::numeric() const {
  Matrix m(static_cast<Eigen::Index>(cells.size()),
           static_cast<Eigen::Index>(header.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_double(cells[i][j]);
    }
  }
  return m;
}

}  // namespace gramnet
