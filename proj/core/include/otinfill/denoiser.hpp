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
#ifndef OTINFILL_DENOISER_HPP_
#define OTINFILL_DENOISER_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "otinfill/masked_diffusion.hpp"
#include "otinfill/tensor.hpp"
#include "otinfill/types.hpp"

namespace otinfill {

struct DenoiserConfig {
  int vocab_size = 32;  // includes PAD and MASK
  int embed_dim = 128;
  int num_layers = 4;
  int num_heads = 4;
  int mlp_ratio = 4;
  int context_length = 64;
  double rotary_scale = 64.0;  // [-1, 1] maps to [-rotary_scale, rotary_scale]
  double rotary_base = 10000.0;
  double noise_epsilon = 1e-3;

  Vocabulary vocab() const { return Vocabulary{vocab_size}; }
  int head_dim() const { return embed_dim / num_heads; }
  // Throws FormatError when the fields are inconsistent.
  void validate() const;

  bool operator==(const DenoiserConfig&) const = default;
};

struct BlockParams {
  Matrix w_mod, b_mod;  // time conditioning -> shift/scale for both sublayers
  Matrix wq, wk, wv, wo, bo;
  Matrix w1, b1, w2, b2;
};

// All trainable tensors. Biases are stored as 1 x n matrices. The same type
// holds gradients and optimizer moments.
struct ParameterSet {
  DenoiserConfig config;
  Matrix tok_emb;   // V x D
  Matrix type_emb;  // 2 x D: prompt, response
  Matrix time_w1, time_b1, time_w2, time_b2;
  std::vector<BlockParams> blocks;
  Matrix final_w_mod, final_b_mod;
  Matrix score_w, score_b;  // D x V
  Matrix vel_w, vel_b;      // D x 1

  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t num_parameters() const;
  void set_zero();
  bool all_finite() const;
  // Same shapes, all zeros.
  static ParameterSet zeros_like(const ParameterSet& p);

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f) {
    f("tok_emb", s.tok_emb);
    f("type_emb", s.type_emb);
    f("time_w1", s.time_w1);
    f("time_b1", s.time_b1);
    f("time_w2", s.time_w2);
    f("time_b2", s.time_b2);
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
      auto& b = s.blocks[k];
      const std::string p = "block" + std::to_string(k) + ".";
      f(p + "w_mod", b.w_mod);
      f(p + "b_mod", b.b_mod);
      f(p + "wq", b.wq);
      f(p + "wk", b.wk);
      f(p + "wv", b.wv);
      f(p + "wo", b.wo);
      f(p + "bo", b.bo);
      f(p + "w1", b.w1);
      f(p + "b1", b.b1);
      f(p + "w2", b.w2);
      f(p + "b2", b.b2);
    }
    f("final_w_mod", s.final_w_mod);
    f("final_b_mod", s.final_b_mod);
    f("score_w", s.score_w);
    f("score_b", s.score_b);
    f("vel_w", s.vel_w);
    f("vel_b", s.vel_b);
  }
};

using ParameterGradients = ParameterSet;

// Weights ~ N(0, init_std^2), biases zero.
ParameterSet init_parameters(const DenoiserConfig& config, std::uint64_t seed,
                             double init_std = 0.02);

struct DenoiserOutput {
  ScoreTable log_scores;  // L x V
  ScoreTable scores;      // exp(log_scores), strictly positive
  std::vector<double> velocities;
};

// Upstream gradient of a scalar loss with respect to the two heads.
struct OutputGrad {
  ScoreTable d_log_scores;
  std::vector<double> d_velocities;
};

// Activations kept by forward for the backward pass.
struct ForwardCache;

class ForwardCacheHandle {
 public:
  ForwardCacheHandle();
  ~ForwardCacheHandle();
  ForwardCacheHandle(ForwardCacheHandle&&) noexcept;
  ForwardCacheHandle& operator=(ForwardCacheHandle&&) noexcept;

  ForwardCache& get() { return *cache_; }
  const ForwardCache& get() const { return *cache_; }

 private:
  std::unique_ptr<ForwardCache> cache_;
};

// Pad slots use the Response type embedding. The score head's log output is
// offset by log ratio(t) so the network itself only models the conditional
// token distribution. Throws NumericalError naming the block on non-finite
// activations.
DenoiserOutput forward(const ParameterSet& params, const DiffusionState& input,
                       ForwardCacheHandle* cache = nullptr);

// Accumulates d loss / d params into `grads`.
void backward(const ParameterSet& params, const ForwardCacheHandle& cache,
              const OutputGrad& upstream, ParameterGradients& grads);

}  // namespace otinfill

#endif  // OTINFILL_DENOISER_HPP_
