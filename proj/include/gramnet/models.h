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

// Fully connected networks for the generator and the critic, their
// initialization, and the ADAM / RMSprop update rules.

#ifndef GRAMNET_MODELS_H_
#define GRAMNET_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gramnet/autodiff.h"

namespace gramnet {

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

// Affine layers with ReLU between them and `output_activation` at the end.
struct MlpSpec {
  std::vector<int> layer_sizes;  // input first, output last
  Activation output_activation = Activation::kIdentity;

  void validate() const;
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t parameter_count() const;
};

// Weights are stored in x out so a layer computes h W + b. Hidden layers use
// Kaiming-uniform bounds sqrt(6 / fan_in), the output layer Xavier-uniform
// sqrt(6 / (fan_in + fan_out)); biases start at zero. Parameters are named
// "<prefix>layer<i>.weight" and "<prefix>layer<i>.bias".
ParamSet mlp_init(const MlpSpec& spec, std::uint64_t seed,
                  std::string_view prefix = "");

// Marks the last layer's bias as not trainable. A critic whose outputs only
// enter a translation-invariant kernel has an identically zero gradient for
// that bias, so freezing it changes nothing but removes a dead parameter.
void freeze_output_bias(const MlpSpec& spec, ParamSet& params,
                        std::string_view prefix = "");

struct ForwardOptions {
  // Number of leading layers to run; -1 runs all of them.
  int layers = -1;
  // Apply the activation of the last layer that runs.
  bool final_activation = true;
};

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var x,
                const ForwardOptions& options = {});
Matrix mlp_forward(const MlpSpec& spec, const ParamSet& params, const Matrix& x,
                   const ForwardOptions& options = {});

// --- optimizers --------------------------------------------------------------

enum class OptimizerKind { kAdam, kRmsprop };
enum class Direction { kAscend, kDescend };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.5;    // ADAM first-moment decay
  double beta2 = 0.999;  // second-moment decay (RMSprop's rho)
  double epsilon = 1e-8;

  static OptimizerConfig adam(double lr, double beta1 = 0.5) {
    return {OptimizerKind::kAdam, lr, beta1, 0.999, 1e-8};
  }
  static OptimizerConfig rmsprop(double lr) {
    return {OptimizerKind::kRmsprop, lr, 0.0, 0.9, 1e-8};
  }
  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

struct OptimizerState {
  std::int64_t steps = 0;
  std::vector<Matrix> first;   // ADAM only
  std::vector<Matrix> second;
};

// One update of every trainable parameter. Throws NonFiniteError naming the
// parameter if its gradient has a non-finite entry (nothing is modified).
void optimizer_step(OptimizerState& state, ParamSet& params,
                    std::span<const Matrix> grads, const OptimizerConfig& cfg,
                    Direction direction);

// --- checkpoints -------------------------------------------------------------

// Text format, version 1:
//   gramnet-params 1
//   <count>
//   then per tensor: "<name> <rows> <cols> <trainable>" and one line of
//   row-major values with 17 significant digits.
inline constexpr int kCheckpointVersion = 1;
void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace gramnet

#endif  // GRAMNET_MODELS_H_
