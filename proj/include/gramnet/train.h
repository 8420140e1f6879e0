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

// Training loops: GRAM (joint critic / generator updates from one shared
// Gram matrix), the MMD-net baseline and a non-saturating GAN baseline.
//
// Every source of randomness is a Philox substream keyed by the run seed, the
// stream tag and the iteration, so a run is a pure function of its config.

#ifndef GRAMNET_TRAIN_H_
#define GRAMNET_TRAIN_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gramnet/autodiff.h"
#include "gramnet/data.h"
#include "gramnet/kernels.h"
#include "gramnet/models.h"
#include "gramnet/ratio.h"

namespace gramnet {

enum class Method { kGram, kGan, kMmdNet };
enum class DataKind { kRing2d, kRing3d, kMnist };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
std::string_view to_string(DataKind d);
DataKind data_kind_from_string(std::string_view s);

struct TrainConfig {
  Method method = Method::kGram;
  DataKind data = DataKind::kRing2d;
  RingSpec ring;
  std::string mnist_images;
  std::string mnist_labels;

  // One iteration is one minibatch step; the synthetic sets are sampled online.
  int iterations = 2000;
  int batch_data = 200;
  int batch_generated = 200;

  NoiseSpec noise;
  std::vector<int> generator_hidden{100, 100};
  Activation generator_output = Activation::kIdentity;
  std::vector<int> critic_hidden{100, 100};
  // Critic output dimension K (GRAM projection; width of the GAN
  // discriminator's last hidden layer).
  int projected_dim = 2;

  KernelSpec kernel;
  CriticLossConfig critic;
  OptimizerConfig generator_optimizer = OptimizerConfig::adam(1e-3);
  OptimizerConfig critic_optimizer = OptimizerConfig::adam(1e-3);

  std::uint64_t seed = 0;
  // Sample count for held-out MMD and the final generated set.
  int eval_size = 2000;
  int snapshot_size = 500;
  // Extra snapshot cadence on top of {0, 10, 100, 1000, end}; 0 disables.
  int snapshot_every = 500;

  // Defaults for a method: GRAM ADAM 1e-3, GAN ADAM 1e-4 with a 10-wide
  // discriminator head, MMD-net RMSprop 1e-3.
  static TrainConfig defaults(Method m);

  void validate() const;
  MlpSpec generator_spec(int data_dim) const;
  // GRAM critic: D-hidden-K. GAN discriminator: D-hidden-K-1 (logit).
  MlpSpec critic_spec(int data_dim) const;
  std::vector<int> snapshot_iterations() const;

  bool operator==(const TrainConfig&) const = default;
};

Dataset make_dataset(const TrainConfig& config);

struct TrainBatch {
  Matrix data;
  Matrix noise;
  // Identifies the two substreams the batch was drawn from.
  std::uint64_t digest = 0;
};

// The data and noise minibatches of iteration `iter` (1-based).
TrainBatch training_batch(const TrainConfig& config, const Dataset& data, int iter);

struct TraceRecord {
  int iter = 0;  // 1-based
  double generator_mmd2 = 0.0;
  // GRAM only; NaN otherwise.
  double pd_estimate = 0.0;
  double critic_loss = 0.0;
  // GAN only; NaN otherwise. Losses are the minimized cross-entropies.
  double gan_d_loss = 0.0;
  double gan_g_loss = 0.0;
  double generator_grad_norm = 0.0;
  std::uint64_t rng_digest = 0;
};

struct Snapshot {
  int iter = 0;
  Matrix data;
  Matrix generated;
  // Critic projections; empty unless the method has a projection.
  Matrix data_projected;
  Matrix generated_projected;
  // Biased MMD^2 between eval_size fresh data and generated samples.
  double held_out_mmd2 = 0.0;
};

struct TrainResult {
  TrainConfig config;
  std::vector<TraceRecord> trace;
  std::vector<Snapshot> snapshots;
  ParamSet generator;
  ParamSet critic;
  std::int64_t generator_steps = 0;
  std::int64_t critic_steps = 0;
  // eval_size samples from the final generator.
  Matrix final_samples;
};

// A loss or gradient turned non-finite, or the ratio system became singular.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(int iteration, std::string loss, const std::string& detail);
  int iteration() const { return iteration_; }
  const std::string& loss_name() const { return loss_; }

 private:
  int iteration_;
  std::string loss_;
};

using TraceObserver = std::function<void(const TraceRecord&)>;

TrainResult train_gram(const TrainConfig& config, const TraceObserver& observer = {});
TrainResult train_mmdnet(const TrainConfig& config, const TraceObserver& observer = {});
TrainResult train_gan(const TrainConfig& config, const TraceObserver& observer = {});
// Dispatches on config.method.
TrainResult train(const TrainConfig& config, const TraceObserver& observer = {});

// mean log D(x) + mean log(1 - D(G(z))), written with log-sigmoids of the logits.
Var gan_discriminator_objective(Var real_logit, Var fake_logit);
// Non-saturating generator objective mean log D(G(z)).
Var gan_generator_objective(Var fake_logit);

struct Projection {
  Matrix data;
  Matrix generated;
  Matrix data_projected;
  Matrix generated_projected;
};

// Original-space batches and their images under the critic.
Projection snapshot_projection(const MlpSpec& critic_spec, const ParamSet& critic,
                               const Matrix& data_batch, const Matrix& gen_batch);

}  // namespace gramnet

#endif  // GRAMNET_TRAIN_H_
