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

#include "gramnet/train.h"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "gramnet/random.h"

namespace gramnet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t seed_for(const TrainConfig& c, Stream s, std::uint64_t index) {
  return substream_seed(c.seed, static_cast<std::uint64_t>(s), index);
}

// Mixes the digests of the per-iteration generators into one value.
std::uint64_t draw_digest(std::uint64_t data_seed, Eigen::Index n_data,
                          std::uint64_t noise_seed, Eigen::Index n_noise) {
  return splitmix64(data_seed ^ splitmix64(noise_seed + 0x9E37u * n_data + n_noise));
}

double grad_norm(const std::vector<Matrix>& grads) {
  double s = 0.0;
  for (const Matrix& g : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

void require_finite(int iter, const char* name, double v) {
  if (!std::isfinite(v)) {
    throw TrainingError(iter, name, "value " + format_double(v));
  }
}

// Shared bookkeeping for the three loops.
class Run {
 public:
  explicit Run(const TrainConfig& config)
      : config_(config), data_(make_dataset(config)) {
    config_.validate();
    gen_spec_ = config_.generator_spec(static_cast<int>(data_.dim()));
    critic_spec_ = config_.critic_spec(static_cast<int>(data_.dim()));
    result_.config = config_;
    result_.generator = mlp_init(gen_spec_, seed_for(config_, Stream::kInit, 0), "generator.");
    if (config_.method != Method::kMmdNet) {
      result_.critic = mlp_init(critic_spec_, seed_for(config_, Stream::kInit, 1), "critic.");
    }
    if (config_.method == Method::kGram) {
      // Only enters through a translation-invariant kernel, so its gradient
      // is identically zero.
      freeze_output_bias(critic_spec_, result_.critic, "critic.");
    }
    const auto snaps = config_.snapshot_iterations();
    snapshot_at_ = std::set<int>(snaps.begin(), snaps.end());
    eval_data_ = data_.sample(config_.eval_size, seed_for(config_, Stream::kEval, 0));
    eval_noise_ = noise_sample(config_.noise, config_.eval_size,
                               seed_for(config_, Stream::kEval, 1));
    snap_data_ = data_.sample(config_.snapshot_size, seed_for(config_, Stream::kSnapshot, 0));
    snap_noise_ = noise_sample(config_.noise, config_.snapshot_size,
                               seed_for(config_, Stream::kSnapshot, 1));
  }

  const TrainConfig& config() const { return config_; }
  const MlpSpec& gen_spec() const { return gen_spec_; }
  const MlpSpec& critic_spec() const { return critic_spec_; }
  TrainResult& result() { return result_; }

  TrainBatch batch(int iter) const { return training_batch(config_, data_, iter); }

  void maybe_snapshot(int iter) {
    if (!snapshot_at_.contains(iter)) return;
    Snapshot s;
    s.iter = iter;
    s.data = snap_data_;
    s.generated = mlp_forward(gen_spec_, result_.generator, snap_noise_);
    if (config_.method == Method::kGram) {
      const Projection p = snapshot_projection(critic_spec_, result_.critic, s.data, s.generated);
      s.data_projected = p.data_projected;
      s.generated_projected = p.generated_projected;
    }
    const Matrix gen_eval = mlp_forward(gen_spec_, result_.generator, eval_noise_);
    s.held_out_mmd2 = mmd2_biased(eval_data_, gen_eval, KernelSpec{{1.0}});
    result_.snapshots.push_back(std::move(s));
  }

  void record(const TraceRecord& r, const TraceObserver& observer) {
    result_.trace.push_back(r);
    if (observer) observer(r);
  }

  TrainResult finish() {
    result_.final_samples = mlp_forward(gen_spec_, result_.generator, eval_noise_);
    return std::move(result_);
  }

 private:
  TrainConfig config_;
  Dataset data_;
  MlpSpec gen_spec_;
  MlpSpec critic_spec_;
  TrainResult result_;
  std::set<int> snapshot_at_;
  Matrix eval_data_, eval_noise_, snap_data_, snap_noise_;
};

// Converts numerical failures inside one iteration into TrainingError.
template <typename Fn>
void guarded(int iter, const char* loss, Fn&& fn) {
  try {
    fn();
  } catch (const SingularMatrixError& e) {
    throw TrainingError(iter, loss, e.what());
  } catch (const NonFiniteError& e) {
    throw TrainingError(iter, loss, e.what());
  }
}

}  // namespace

// --- enums -----------------------------------------------------------------------

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kGram: return "gram";
    case Method::kGan: return "gan";
    case Method::kMmdNet: return "mmdnet";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "gram") return Method::kGram;
  if (s == "gan") return Method::kGan;
  if (s == "mmdnet") return Method::kMmdNet;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

std::string_view to_string(DataKind d) {
  switch (d) {
    case DataKind::kRing2d: return "ring2d";
    case DataKind::kRing3d: return "ring3d";
    case DataKind::kMnist: return "mnist";
  }
  return "?";
}

DataKind data_kind_from_string(std::string_view s) {
  if (s == "ring2d") return DataKind::kRing2d;
  if (s == "ring3d") return DataKind::kRing3d;
  if (s == "mnist") return DataKind::kMnist;
  throw std::invalid_argument("unknown dataset '" + std::string(s) + "'");
}

// --- config ----------------------------------------------------------------------

TrainConfig TrainConfig::defaults(Method m) {
  TrainConfig c;
  c.method = m;
  switch (m) {
    case Method::kGram:
      break;
    case Method::kGan:
      c.generator_optimizer = OptimizerConfig::adam(1e-4);
      c.critic_optimizer = OptimizerConfig::adam(1e-4);
      c.projected_dim = 10;
      break;
    case Method::kMmdNet:
      c.generator_optimizer = OptimizerConfig::rmsprop(1e-3);
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (batch_data < 1 || batch_generated < 1) fail("batch sizes must be >= 1");
  if (projected_dim < 1) fail("projected_dim must be >= 1");
  if (eval_size < 1 || snapshot_size < 1) fail("eval_size and snapshot_size must be >= 1");
  if (snapshot_every < 0) fail("snapshot_every must be >= 0");
  for (int h : generator_hidden) {
    if (h < 1) fail("generator_hidden sizes must be >= 1");
  }
  for (int h : critic_hidden) {
    if (h < 1) fail("critic_hidden sizes must be >= 1");
  }
  noise.validate();
  kernel.validate();
  critic.validate();
  generator_optimizer.validate();
  critic_optimizer.validate();
  if (data != DataKind::kMnist) ring.validate();
  if (data == DataKind::kMnist && (mnist_images.empty() || mnist_labels.empty())) {
    fail("mnist needs mnist_images and mnist_labels paths");
  }
}

MlpSpec TrainConfig::generator_spec(int data_dim) const {
  MlpSpec s;
  s.layer_sizes.push_back(noise.dim);
  s.layer_sizes.insert(s.layer_sizes.end(), generator_hidden.begin(), generator_hidden.end());
  s.layer_sizes.push_back(data_dim);
  s.output_activation = generator_output;
  return s;
}

MlpSpec TrainConfig::critic_spec(int data_dim) const {
  MlpSpec s;
  s.layer_sizes.push_back(data_dim);
  s.layer_sizes.insert(s.layer_sizes.end(), critic_hidden.begin(), critic_hidden.end());
  s.layer_sizes.push_back(projected_dim);
  if (method == Method::kGan) s.layer_sizes.push_back(1);
  return s;
}

std::vector<int> TrainConfig::snapshot_iterations() const {
  std::set<int> at;
  for (int i : {0, 10, 100, 1000, iterations}) {
    if (i <= iterations) at.insert(i);
  }
  if (snapshot_every > 0) {
    for (int i = snapshot_every; i <= iterations; i += snapshot_every) at.insert(i);
  }
  return {at.begin(), at.end()};
}

Dataset make_dataset(const TrainConfig& config) {
  switch (config.data) {
    case DataKind::kRing2d: return Dataset::ring2d(config.ring);
    case DataKind::kRing3d: return Dataset::ring3d(config.ring);
    case DataKind::kMnist: return mnist_load(config.mnist_images, config.mnist_labels);
  }
  throw std::invalid_argument("unknown dataset");
}

TrainingError::TrainingError(int iteration, std::string loss, const std::string& detail)
    : std::runtime_error("iteration " + std::to_string(iteration) + ": " + loss +
                         " failed: " + detail),
      iteration_(iteration),
      loss_(std::move(loss)) {}

TrainBatch training_batch(const TrainConfig& config, const Dataset& data, int iter) {
  const std::uint64_t ds = seed_for(config, Stream::kData, iter);
  const std::uint64_t ns = seed_for(config, Stream::kNoise, iter);
  return {data.sample(config.batch_data, ds),
          noise_sample(config.noise, config.batch_generated, ns),
          draw_digest(ds, config.batch_data, ns, config.batch_generated)};
}

Var gan_discriminator_objective(Var real_logit, Var fake_logit) {
  return add(mean(log_sigmoid(real_logit)), mean(log_sigmoid(neg(fake_logit))));
}

Var gan_generator_objective(Var fake_logit) { return mean(log_sigmoid(fake_logit)); }

Projection snapshot_projection(const MlpSpec& critic_spec, const ParamSet& critic,
                               const Matrix& data_batch, const Matrix& gen_batch) {
  return {data_batch, gen_batch, mlp_forward(critic_spec, critic, data_batch),
          mlp_forward(critic_spec, critic, gen_batch)};
}

// --- GRAM ------------------------------------------------------------------------

TrainResult train_gram(const TrainConfig& config, const TraceObserver& observer) {
  if (config.method != Method::kGram) throw std::invalid_argument("train_gram: method is not gram");
  Run run(config);
  const TrainConfig& c = run.config();
  TrainResult& res = run.result();
  OptimizerState gen_state, critic_state;
  run.maybe_snapshot(0);

  for (int iter = 1; iter <= c.iterations; ++iter) {
    const TrainBatch b = run.batch(iter);
    TraceRecord rec;
    rec.iter = iter;
    rec.rng_digest = b.digest;
    rec.gan_d_loss = rec.gan_g_loss = kNaN;
    std::vector<Matrix> critic_grads, gen_grads;

    guarded(iter, "critic", [&] {
      Graph g;
      const std::vector<Var> gamma = bind(g, res.generator);
      const std::vector<Var> theta = bind(g, res.critic);
      Var generated = mlp_forward(run.gen_spec(), gamma, g.constant(b.noise));
      Var fq = mlp_forward(run.critic_spec(), theta, generated);
      Var fp = mlp_forward(run.critic_spec(), theta, g.constant(b.data));
      // One set of Gram matrices feeds both objectives.
      const GramPair gram = gram_pair(fq, fp, c.kernel);
      const RatioEstimate ratio = estimate_ratio(gram.k_qq, gram.k_qp, c.critic.ridge);
      Var critic_obj = critic_loss(ratio, c.critic);
      Var gen_loss = mmd2_biased(gram);
      rec.critic_loss = critic_obj.scalar();
      rec.pd_estimate = pearson_divergence_estimate(ratio).scalar();
      rec.generator_mmd2 = gen_loss.scalar();
      require_finite(iter, "critic", rec.critic_loss);
      require_finite(iter, "pd_estimate", rec.pd_estimate);
      require_finite(iter, "generator", rec.generator_mmd2);

      g.backward(critic_obj);
      critic_grads = gradients(g, theta);
      g.backward(gen_loss);
      gen_grads = gradients(g, gamma);
    });

    rec.generator_grad_norm = grad_norm(gen_grads);
    require_finite(iter, "generator_grad", rec.generator_grad_norm);
    guarded(iter, "critic", [&] {
      optimizer_step(critic_state, res.critic, critic_grads, c.critic_optimizer,
                     Direction::kAscend);
    });
    guarded(iter, "generator", [&] {
      optimizer_step(gen_state, res.generator, gen_grads, c.generator_optimizer,
                     Direction::kDescend);
    });
    res.critic_steps = critic_state.steps;
    res.generator_steps = gen_state.steps;
    run.record(rec, observer);
    run.maybe_snapshot(iter);
  }
  return run.finish();
}

// --- MMD-net ---------------------------------------------------------------------

TrainResult train_mmdnet(const TrainConfig& config, const TraceObserver& observer) {
  if (config.method != Method::kMmdNet) {
    throw std::invalid_argument("train_mmdnet: method is not mmdnet");
  }
  Run run(config);
  const TrainConfig& c = run.config();
  TrainResult& res = run.result();
  OptimizerState gen_state;
  run.maybe_snapshot(0);

  for (int iter = 1; iter <= c.iterations; ++iter) {
    const TrainBatch b = run.batch(iter);
    TraceRecord rec;
    rec.iter = iter;
    rec.rng_digest = b.digest;
    rec.pd_estimate = rec.critic_loss = rec.gan_d_loss = rec.gan_g_loss = kNaN;
    std::vector<Matrix> grads;
    guarded(iter, "generator", [&] {
      Graph g;
      const std::vector<Var> gamma = bind(g, res.generator);
      Var generated = mlp_forward(run.gen_spec(), gamma, g.constant(b.noise));
      Var loss = mmd2_biased(gram_pair(generated, g.constant(b.data), c.kernel));
      rec.generator_mmd2 = loss.scalar();
      require_finite(iter, "generator", rec.generator_mmd2);
      g.backward(loss);
      grads = gradients(g, gamma);
    });
    rec.generator_grad_norm = grad_norm(grads);
    require_finite(iter, "generator_grad", rec.generator_grad_norm);
    guarded(iter, "generator", [&] {
      optimizer_step(gen_state, res.generator, grads, c.generator_optimizer,
                     Direction::kDescend);
    });
    res.generator_steps = gen_state.steps;
    run.record(rec, observer);
    run.maybe_snapshot(iter);
  }
  return run.finish();
}

// --- GAN -------------------------------------------------------------------------

TrainResult train_gan(const TrainConfig& config, const TraceObserver& observer) {
  if (config.method != Method::kGan) throw std::invalid_argument("train_gan: method is not gan");
  Run run(config);
  const TrainConfig& c = run.config();
  TrainResult& res = run.result();
  OptimizerState gen_state, disc_state;
  run.maybe_snapshot(0);

  for (int iter = 1; iter <= c.iterations; ++iter) {
    const TrainBatch b = run.batch(iter);
    TraceRecord rec;
    rec.iter = iter;
    rec.rng_digest = b.digest;
    rec.pd_estimate = rec.critic_loss = kNaN;

    // Discriminator: ascend mean log D(x) + mean log(1 - D(G(z))).
    std::vector<Matrix> disc_grads;
    guarded(iter, "discriminator", [&] {
      Graph g;
      const Matrix fake = mlp_forward(run.gen_spec(), res.generator, b.noise);
      const std::vector<Var> theta = bind(g, res.critic);
      Var real_logit = mlp_forward(run.critic_spec(), theta, g.constant(b.data));
      Var fake_logit = mlp_forward(run.critic_spec(), theta, g.constant(fake));
      Var objective = gan_discriminator_objective(real_logit, fake_logit);
      rec.gan_d_loss = -objective.scalar();
      require_finite(iter, "discriminator", rec.gan_d_loss);
      g.backward(objective);
      disc_grads = gradients(g, theta);
      optimizer_step(disc_state, res.critic, disc_grads, c.critic_optimizer, Direction::kAscend);
    });

    // Generator: ascend mean log D(G(z)) against the updated discriminator.
    std::vector<Matrix> gen_grads;
    guarded(iter, "generator", [&] {
      Graph g;
      const std::vector<Var> gamma = bind(g, res.generator);
      std::vector<Var> theta;
      for (const auto& t : res.critic) theta.push_back(g.constant(t.value));
      Var generated = mlp_forward(run.gen_spec(), gamma, g.constant(b.noise));
      Var objective = gan_generator_objective(mlp_forward(run.critic_spec(), theta, generated));
      rec.gan_g_loss = -objective.scalar();
      require_finite(iter, "generator", rec.gan_g_loss);
      g.backward(objective);
      gen_grads = gradients(g, gamma);
      rec.generator_grad_norm = grad_norm(gen_grads);
      require_finite(iter, "generator_grad", rec.generator_grad_norm);
      optimizer_step(gen_state, res.generator, gen_grads, c.generator_optimizer,
                     Direction::kAscend);
    });

    // Data-space MMD of the batch, traced for comparison with the other methods.
    rec.generator_mmd2 =
        mmd2_biased(b.data, mlp_forward(run.gen_spec(), res.generator, b.noise), c.kernel);
    res.critic_steps = disc_state.steps;
    res.generator_steps = gen_state.steps;
    run.record(rec, observer);
    run.maybe_snapshot(iter);
  }
  return run.finish();
}

TrainResult train(const TrainConfig& config, const TraceObserver& observer) {
  switch (config.method) {
    case Method::kGram: return train_gram(config, observer);
    case Method::kGan: return train_gan(config, observer);
    case Method::kMmdNet: return train_mmdnet(config, observer);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace gramnet
