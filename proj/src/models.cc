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

#include "gramnet/models.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gramnet/data.h"
#include "gramnet/random.h"

namespace gramnet {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("mlp: need at least input and output sizes");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  }
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    n += static_cast<std::size_t>(layer_sizes[i]) * layer_sizes[i + 1] +
         layer_sizes[i + 1];
  }
  return n;
}

ParamSet mlp_init(const MlpSpec& spec, std::uint64_t seed,
                  std::string_view prefix) {
  spec.validate();
  Rng rng(seed, static_cast<std::uint64_t>(Stream::kInit));
  ParamSet params;
  const int layers = spec.num_layers();
  for (int l = 0; l < layers; ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double bound = (l + 1 < layers)
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-bound, bound);
    }
    const std::string base = std::string(prefix) + "layer" + std::to_string(l);
    params.add(base + ".weight", std::move(w));
    params.add(base + ".bias", Matrix::Zero(1, fan_out));
  }
  return params;
}

void freeze_output_bias(const MlpSpec& spec, ParamSet& params,
                        std::string_view prefix) {
  const std::string name = std::string(prefix) + "layer" +
                           std::to_string(spec.num_layers() - 1) + ".bias";
  for (auto& t : params) {
    if (t.name == name) {
      t.trainable = false;
      return;
    }
  }
  throw std::invalid_argument("freeze_output_bias: no parameter " + name);
}

namespace {

Var activate(Var h, Activation a) {
  switch (a) {
    case Activation::kIdentity: return h;
    case Activation::kRelu: return relu(h);
    case Activation::kTanh: return tanh(h);
    case Activation::kSigmoid: return sigmoid(h);
  }
  return h;
}

}  // namespace

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var x,
                const ForwardOptions& options) {
  spec.validate();
  const int total = spec.num_layers();
  const int layers = options.layers < 0 ? total : options.layers;
  if (layers > total || params.size() != static_cast<std::size_t>(2 * total)) {
    throw std::invalid_argument("mlp_forward: " + std::to_string(params.size()) +
                                " parameter tensors for " +
                                std::to_string(total) + " layers");
  }
  if (x.cols() != spec.input_dim()) {
    throw ShapeError("mlp_forward: input " + shape_str(x.rows(), x.cols()) +
                     " but network expects " + std::to_string(spec.input_dim()) +
                     " columns");
  }
  Var h = x;
  for (int l = 0; l < layers; ++l) {
    h = add(matmul(h, params[2 * l]), params[2 * l + 1]);
    const bool last = (l + 1 == layers);
    if (!last) {
      h = relu(h);
    } else if (options.final_activation) {
      h = activate(h, l + 1 == total ? spec.output_activation : Activation::kRelu);
    }
  }
  return h;
}

Matrix mlp_forward(const MlpSpec& spec, const ParamSet& params, const Matrix& x,
                   const ForwardOptions& options) {
  Graph g;
  std::vector<Var> vars;
  for (const ParamTensor& p : params) vars.push_back(g.constant(p.value));
  return mlp_forward(spec, vars, g.constant(x), options).value();
}

// --- optimizers ----------------------------------------------------------------

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "rmsprop";
}

OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "rmsprop") return OptimizerKind::kRmsprop;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("optimizer: learning_rate must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) {
    throw std::invalid_argument("optimizer: beta1 must be in [0, 1)");
  }
  if (!(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: beta2 must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be > 0");
}

void optimizer_step(OptimizerState& state, ParamSet& params,
                    std::span<const Matrix> grads, const OptimizerConfig& cfg,
                    Direction direction) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("optimizer_step: " + std::to_string(grads.size()) +
                                " gradients for " + std::to_string(params.size()) +
                                " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].value.rows() ||
        grads[i].cols() != params[i].value.cols()) {
      throw ShapeError("optimizer_step: gradient for '" + params[i].name + "' is " +
                       shape_str(grads[i].rows(), grads[i].cols()));
    }
    if (params[i].trainable && !grads[i].allFinite()) {
      throw NonFiniteError("optimizer_step: non-finite gradient for '" +
                           params[i].name + "'");
    }
  }
  if (state.second.empty()) {
    for (const ParamTensor& p : params) {
      state.first.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      state.second.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++state.steps;
  const double sign = direction == Direction::kAscend ? 1.0 : -1.0;
  const double t = static_cast<double>(state.steps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const auto g = grads[i].array();
    auto v = state.second[i].array();
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    auto p = params[i].value.array();
    if (cfg.kind == OptimizerKind::kAdam) {
      auto m = state.first[i].array();
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      p += sign * cfg.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
    } else {
      p += sign * cfg.learning_rate * g / (v.sqrt() + cfg.epsilon);
    }
  }
}

// --- checkpoints -----------------------------------------------------------------

void save_params(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "gramnet-params " << kCheckpointVersion << '\n' << params.size() << '\n';
  for (const ParamTensor& p : params) {
    out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << ' '
        << (p.trainable ? 1 : 0) << '\n';
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        out << ((i || j) ? " " : "") << format_double(p.value(i, j));
      }
    }
    out << '\n';
  }
}

ParamSet load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "gramnet-params") {
    throw std::runtime_error(path.string() + ": not a gramnet checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  if (!(in >> count)) throw std::runtime_error(path.string() + ": missing count");
  ParamSet params;
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    int trainable = 1;
    if (!(in >> name >> rows >> cols >> trainable)) {
      throw std::runtime_error(path.string() + ": truncated tensor header");
    }
    Matrix value(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::string tok;
        if (!(in >> tok)) {
          throw std::runtime_error(path.string() + ": truncated values for '" +
                                   name + "'");
        }
        value(i, j) = std::stod(tok);
      }
    }
    params.add(std::move(name), std::move(value), trainable != 0);
  }
  return params;
}

}  // namespace gramnet
