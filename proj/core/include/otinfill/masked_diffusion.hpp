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
#ifndef OTINFILL_MASKED_DIFFUSION_HPP_
#define OTINFILL_MASKED_DIFFUSION_HPP_

#include <span>
#include <vector>

#include "otinfill/random.hpp"
#include "otinfill/tensor.hpp"
#include "otinfill/types.hpp"

// Absorbing-state discrete diffusion over token values. Every ordinary token
// decays into MASK under a rate matrix with diagonal -1 and a MASK row of 1,
// time-scaled by the schedule below.
namespace otinfill {

// Log-linear schedule: sigma_bar(t) = -log(1 - (1 - eps) t), so that the
// probability of being masked at time t is (1 - eps) t.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(double epsilon = 1e-3);

  double epsilon() const { return epsilon_; }
  double sigma_bar(double t) const;
  double mask_prob(double t) const;
  // exp(-sigma_bar) / (1 - exp(-sigma_bar)): the true score of the clean
  // token relative to MASK, given the clean token.
  double ratio(double t) const;
  double log_ratio(double t) const;

 private:
  double epsilon_;
};

// Replaces each eligible token by MASK with probability mask_prob(t). With no
// explicit exemption list, PAD tokens are exempt. Pass `exempt` (one flag per
// slot) to choose the exempt slots directly.
TokenSequence forward_corrupt(const TokenSequence& x0, double t,
                              const NoiseSchedule& schedule,
                              const Vocabulary& vocab, Rng& rng,
                              std::span<const bool> exempt = {});

enum class TokenLossWeight {
  kConstant,      // w = 1 per masked slot
  kInverseRatio,  // w = 1 / ratio(t); per-slot gradients stay O(1)
};

struct TokenLoss {
  double value = 0.0;
  int masked = 0;
  // d value / d log s, same shape as the score table. Zero outside masked
  // slots and in the MASK column.
  ScoreTable grad_log_scores;
};

// Score-entropy loss averaged over masked slots:
//   w(t) * [ sum_{y != MASK} s[i][y] - ratio(t) * log s[i][x0_i] ].
// Returns +inf (not clipped) if the score of a true token is zero.
double token_loss(const ScoreTable& scores, const TokenSequence& x_t,
                  const TokenSequence& x0, double t,
                  const NoiseSchedule& schedule, const Vocabulary& vocab,
                  TokenLossWeight weight = TokenLossWeight::kConstant);

// Same loss taking log-scores, with its gradient.
TokenLoss token_loss_from_log_scores(const ScoreTable& log_scores,
                                     const TokenSequence& x_t,
                                     const TokenSequence& x0, double t,
                                     const NoiseSchedule& schedule,
                                     const Vocabulary& vocab,
                                     TokenLossWeight weight);

struct ReverseStepStats {
  int renormalized = 0;  // slots whose unmask mass exceeded 1
};

// Transition distribution of a masked slot over one reverse step of size dt.
// Entry y != MASK is the probability of unmasking to y; the MASK entry is the
// probability of staying masked. With `anneal`, the unmask mass collapses
// onto its argmax token.
std::vector<double> reverse_transition(std::span<const double> score_row,
                                       double t, double dt,
                                       const NoiseSchedule& schedule,
                                       const Vocabulary& vocab, bool anneal,
                                       bool* renormalized = nullptr);

// One tau-leaping step from t to t - dt. Unmasked slots never change.
TokenSequence reverse_token_step(const ScoreTable& scores,
                                 const TokenSequence& x_t, double t, double dt,
                                 const NoiseSchedule& schedule,
                                 const Vocabulary& vocab, bool anneal, Rng& rng,
                                 ReverseStepStats* stats = nullptr);

// Resolves residual MASK slots to their highest-scoring non-MASK token,
// lowest id first on ties.
TokenSequence finalize_tokens(const TokenSequence& x, const ScoreTable& scores,
                              const Vocabulary& vocab);

}  // namespace otinfill

#endif  // OTINFILL_MASKED_DIFFUSION_HPP_
