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
#include "otinfill/trainer.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "otinfill/errors.hpp"
#include "otinfill/text_io.hpp"

namespace otinfill {
namespace {

constexpr std::uint64_t kNoiseStream = 0x11;
constexpr std::uint64_t kBatchStream = 0x23;
// Separate from the noise stream so t and the masks match across OT on/off.
constexpr std::uint64_t kShuffleStream = 0x29;

template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

std::string describe(const PreparedSample& s) {
  std::string out = "sample " + std::to_string(s.sample_id) +
                    " t=" + std::to_string(s.input.t) +
                    "\n  x_t: " + format_token_line(s.input.tokens) +
                    "\n  x0:  " + format_token_line(s.target_tokens) +
                    "\n  classes:";
  for (SlotClass c : s.input.classes) out += " " + std::string(to_string(c));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw FormatError("train: " + m); };
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(adam.lr > 0.0)) fail("lr must be > 0");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (steps < 0) fail("steps must be >= 0");
  if (num_threads <= 0) fail("num_threads must be positive");
  if (prefetch_depth <= 0) fail("prefetch_depth must be positive");
}

PreparedSample prepare_sample(const TrainingExample& example,
                              std::uint64_t sample_id,
                              const DenoiserConfig& model,
                              const TrainConfig& cfg, OTCache* cache) {
  const int L = model.context_length;
  const int l = example.length();
  if (l > L) {
    throw CapacityError("sample length " + std::to_string(l) +
                        " exceeds context " + std::to_string(L));
  }
  const Vocabulary vocab = model.vocab();
  const NoiseSchedule schedule(model.noise_epsilon);
  Rng noise = make_rng(cfg.seed, {kNoiseStream, sample_id});

  PositionVector zT;
  Coupling coupling;
  if (cfg.ot_enabled) {
    if (cache != nullptr) {
      const auto& e = cache->get(example, sample_id, L, cfg.zT_mode, cfg.seed);
      zT = e.zT;
      coupling = e.coupling;
    } else {
      auto e = compute_ot_entry(example, sample_id, L, cfg.zT_mode, cfg.seed);
      zT = std::move(e.zT);
      coupling = std::move(e.coupling);
    }
  } else {
    Rng limit = limit_stream(cfg.seed, sample_id);
    zT = draw_limit(L, example.num_prompt(), cfg.zT_mode, limit);
    const auto z0 = build_z0(l, L);
    std::vector<SlotClass> classes0(l);
    for (int i = 0; i < l; ++i) {
      classes0[i] =
          example.prompt[i] ? SlotClass::kPrompt : SlotClass::kResponse;
    }
    Rng shuffle = make_rng(cfg.seed, {kShuffleStream, sample_id});
    coupling =
        random_coupling(z0, classes0, zT.values, zT.classes, l, L, shuffle);
  }

  PreparedSample s;
  s.sample_id = sample_id;
  s.input.t = uniform_open(noise, 0.0, 1.0);
  s.padded_z0 = std::move(coupling.padded_z0);
  s.zT = std::move(zT.values);
  s.input.classes = std::move(coupling.target_classes);
  s.input.positions = interpolate(s.padded_z0, s.zT, s.input.t);

  s.target_tokens.assign(L, vocab.pad());
  std::vector<bool> exempt(L, false);
  for (int j = 0; j < L; ++j) {
    const int src = coupling.source_of_target[j];
    if (src >= 0) s.target_tokens[j] = example.tokens[src];
    exempt[j] = s.input.classes[j] == SlotClass::kPrompt;
  }
  // std::vector<bool> has no contiguous storage; copy into a plain array.
  std::unique_ptr<bool[]> flags(new bool[L]);
  for (int j = 0; j < L; ++j) flags[j] = exempt[j];
  s.input.tokens =
      forward_corrupt(s.target_tokens, s.input.t, schedule, vocab, noise,
                      std::span<const bool>(flags.get(), L));
  return s;
}

namespace {

struct SampleGrad {
  double token_loss = 0.0;
  double position_loss = 0.0;
  double masked_fraction = 0.0;
};

SampleGrad accumulate_sample(const ParameterSet& params,
                             const PreparedSample& s, const TrainConfig& cfg,
                             double inv_batch, ParameterGradients& grads) {
  const DenoiserConfig& model = params.config;
  const NoiseSchedule schedule(model.noise_epsilon);
  ForwardCacheHandle cache;
  const DenoiserOutput out = forward(params, s.input, &cache);
  TokenLoss tok =
      token_loss_from_log_scores(out.log_scores, s.input.tokens,
                                 s.target_tokens, s.input.t, schedule,
                                 model.vocab(), cfg.token_weight);
  const double pos = position_loss(out.velocities, s.padded_z0, s.zT);
  if (!std::isfinite(tok.value) || !std::isfinite(pos)) {
    throw NumericalError("non-finite loss (token " + std::to_string(tok.value) +
                         ", position " + std::to_string(pos) + ") for " +
                         describe(s));
  }
  OutputGrad up;
  up.d_log_scores = std::move(tok.grad_log_scores);
  up.d_log_scores *= inv_batch;
  up.d_velocities = position_loss_grad(out.velocities, s.padded_z0, s.zT);
  for (double& g : up.d_velocities) g *= cfg.lambda * inv_batch;
  backward(params, cache, up, grads);
  return {tok.value, pos,
          static_cast<double>(tok.masked) / model.context_length};
}

}  // namespace

BatchGradients compute_batch_gradients(const ParameterSet& params,
                                       std::span<const PreparedSample> batch,
                                       const TrainConfig& cfg) {
  BatchGradients out;
  out.grads = ParameterSet::zeros_like(params);
  if (batch.empty()) return out;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.num_threads), batch.size());

  std::vector<SampleGrad> per_sample(batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      per_sample[i] = accumulate_sample(params, batch[i], cfg, inv_batch,
                                        out.grads);
    }
  } else {
    // Contiguous chunks, reduced in chunk order.
    const std::size_t chunk = (batch.size() + workers - 1) / workers;
    std::vector<ParameterGradients> partial(workers,
                                            ParameterSet::zeros_like(params));
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(batch.size(), b + chunk);
            for (std::size_t i = b; i < e; ++i) {
              per_sample[i] = accumulate_sample(params, batch[i], cfg,
                                                inv_batch, partial[w]);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
    for (std::size_t w = 0; w < workers; ++w) {
      std::vector<Matrix*> dst;
      out.grads.visit([&](const std::string&, Matrix& m) { dst.push_back(&m); });
      std::size_t k = 0;
      partial[w].visit(
          [&](const std::string&, const Matrix& m) { *dst[k++] += m; });
    }
  }
  for (const auto& g : per_sample) {
    out.token_loss += g.token_loss * inv_batch;
    out.position_loss += g.position_loss * inv_batch;
    out.masked_fraction += g.masked_fraction * inv_batch;
  }
  return out;
}

TrainStepReport train_on_prepared(ParameterSet& params, AdamWState& state,
                                  std::span<const PreparedSample> batch,
                                  const TrainConfig& cfg, int step) {
  const auto start = std::chrono::steady_clock::now();
  BatchGradients bg = compute_batch_gradients(params, batch, cfg);
  if (cfg.grad_clip > 0.0) clip_global_norm(bg.grads, cfg.grad_clip);
  optimize(params, bg.grads, cfg.adam, state);
  if (!params.all_finite()) {
    throw NumericalError("parameters became non-finite at step " +
                         std::to_string(step));
  }
  TrainStepReport r;
  r.step = step;
  r.token_loss = bg.token_loss;
  r.position_loss = bg.position_loss;
  r.total_loss = bg.token_loss + cfg.lambda * bg.position_loss;
  r.masked_fraction = bg.masked_fraction;
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

TrainStepReport train_step(ParameterSet& params, AdamWState& state,
                           std::span<const TrainingExample> batch,
                           const TrainConfig& cfg, int step, OTCache* cache) {
  std::vector<PreparedSample> prepared;
  prepared.reserve(batch.size());
  const auto base = static_cast<std::uint64_t>(step) *
                    static_cast<std::uint64_t>(cfg.batch_size);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    prepared.push_back(
        prepare_sample(batch[i], base + i, params.config, cfg, cache));
  }
  return train_on_prepared(params, state, prepared, cfg, step);
}

std::vector<std::size_t> batch_indices(std::size_t corpus_size,
                                       const TrainConfig& cfg, int step) {
  if (corpus_size == 0) throw EmptySequenceError("training corpus is empty");
  Rng rng = make_rng(cfg.seed, {kBatchStream, static_cast<std::uint64_t>(step)});
  std::uniform_int_distribution<std::size_t> pick(0, corpus_size - 1);
  std::vector<std::size_t> out(static_cast<std::size_t>(cfg.batch_size));
  for (auto& i : out) i = pick(rng);
  return out;
}

void run_training(ParameterSet& params, AdamWState& state,
                  const std::vector<TrainingExample>& examples,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks,
                  OTCache* cache) {
  cfg.validate();
  for (const auto& e : examples) {
    if (e.length() > params.config.context_length) {
      throw CapacityError("training example longer than context_length");
    }
  }
  using Batch = std::vector<PreparedSample>;
  BoundedQueue<Batch> queue(static_cast<std::size_t>(cfg.prefetch_depth));
  std::exception_ptr producer_error;
  const DenoiserConfig model = params.config;

  std::jthread producer([&] {
    try {
      for (int step = 0; step < cfg.steps; ++step) {
        const auto idx = batch_indices(examples.size(), cfg, step);
        const auto base = static_cast<std::uint64_t>(step) *
                          static_cast<std::uint64_t>(cfg.batch_size);
        Batch batch;
        batch.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
          batch.push_back(
              prepare_sample(examples[idx[i]], base + i, model, cfg, cache));
        }
        queue.push(std::move(batch));
      }
    } catch (...) {
      producer_error = std::current_exception();
    }
    queue.close();
  });

  try {
    for (int step = 0; step < cfg.steps; ++step) {
      auto batch = queue.pop();
      if (!batch) break;
      const TrainStepReport r = train_on_prepared(params, state, *batch, cfg, step);
      if (callbacks.on_step) callbacks.on_step(r);
      if (callbacks.on_checkpoint && callbacks.checkpoint_every > 0 &&
          (step + 1) % callbacks.checkpoint_every == 0) {
        callbacks.on_checkpoint(step, params);
      }
    }
  } catch (...) {
    queue.close();
    throw;
  }
  producer.join();
  if (producer_error) std::rethrow_exception(producer_error);
}

std::string metrics_header() {
  return "step\ttoken_loss\tposition_loss\ttotal_loss\tmasked_fraction";
}

std::string format_metrics(const TrainStepReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\t%.10g\t%.6f", r.step,
                r.token_loss, r.position_loss, r.total_loss, r.masked_fraction);
  return buf;
}

}  // namespace otinfill
