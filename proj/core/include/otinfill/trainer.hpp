// Copyright 2026 The otinfill Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef OTINFILL_TRAINER_HPP_
#define OTINFILL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "otinfill/corpus.hpp"
#include "otinfill/denoiser.hpp"
#include "otinfill/masked_diffusion.hpp"
#include "otinfill/optimizer.hpp"
#include "otinfill/ot_cache.hpp"
#include "otinfill/position_diffusion.hpp"

namespace otinfill {

struct TrainConfig {
  double lambda = 10.0;
  int batch_size = 16;
  AdamWConfig adam;
  int steps = 1000;
  std::uint64_t seed = 0;
  LimitMode zT_mode = LimitMode::kRandom;
  bool ot_enabled = true;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  TokenLossWeight token_weight = TokenLossWeight::kInverseRatio;
  // Gradient workers. Results are deterministic for a fixed value.
  int num_threads = 1;
  int prefetch_depth = 4;

  void validate() const;
};

struct TrainStepReport {
  int step = 0;
  double token_loss = 0.0;
  double position_loss = 0.0;
  double total_loss = 0.0;  // token_loss + lambda * position_loss
  double masked_fraction = 0.0;
  double wall_ms = 0.0;
};

// Everything one sample contributes to a step: model input and targets, all
// slot-aligned with the limiting draw.
struct PreparedSample {
  std::uint64_t sample_id = 0;
  DiffusionState input;        // x_t, z_t, classes (pads marked), t
  TokenSequence target_tokens;  // x0 with PAD at pad slots
  std::vector<double> padded_z0;
  std::vector<double> zT;
};

// Builds z0, draws zT and t, couples (OT or random), interpolates and
// corrupts. Prompt slots are never masked; pad slots are. With a cache, the
// OT coupling for `sample_id` is taken from it.
PreparedSample prepare_sample(const TrainingExample& example,
                              std::uint64_t sample_id,
                              const DenoiserConfig& model,
                              const TrainConfig& cfg,
                              OTCache* cache = nullptr);

struct BatchGradients {
  double token_loss = 0.0;
  double position_loss = 0.0;
  double masked_fraction = 0.0;
  ParameterGradients grads;
};

// Mean losses over the batch and their gradients; no parameter update.
BatchGradients compute_batch_gradients(const ParameterSet& params,
                                       std::span<const PreparedSample> batch,
                                       const TrainConfig& cfg);

// Loss, clip, AdamW update.
TrainStepReport train_on_prepared(ParameterSet& params, AdamWState& state,
                                  std::span<const PreparedSample> batch,
                                  const TrainConfig& cfg, int step);

// Prepares the batch with sample ids step * batch_size + i, then trains.
TrainStepReport train_step(ParameterSet& params, AdamWState& state,
                           std::span<const TrainingExample> batch,
                           const TrainConfig& cfg, int step,
                           OTCache* cache = nullptr);

// Corpus indices drawn for `step` (uniform with replacement).
std::vector<std::size_t> batch_indices(std::size_t corpus_size,
                                       const TrainConfig& cfg, int step);

struct TrainCallbacks {
  std::function<void(const TrainStepReport&)> on_step;
  // Called after step `step` completes when (step + 1) % every == 0.
  std::function<void(int step, const ParameterSet&)> on_checkpoint;
  int checkpoint_every = 0;
};

// Runs cfg.steps steps. A producer thread prepares upcoming batches
// (including their couplings) into a bounded queue of depth
// cfg.prefetch_depth; the update itself runs on the calling thread. A cache,
// if given, is only touched by the producer.
void run_training(ParameterSet& params, AdamWState& state,
                  const std::vector<TrainingExample>& examples,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks = {},
                  OTCache* cache = nullptr);

// Tab-separated metrics line: step, token_loss, position_loss, total_loss,
// masked_fraction. Wall time is logged separately so the metrics log is
// reproducible.
std::string metrics_header();
std::string format_metrics(const TrainStepReport& r);

}  // namespace otinfill

#endif  // OTINFILL_TRAINER_HPP_
