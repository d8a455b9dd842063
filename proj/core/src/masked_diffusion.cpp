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
#include "otinfill/masked_diffusion.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace {

void check_time(double t, const char* where) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError(std::string(where) + ": t=" + std::to_string(t) +
                      " outside [0, 1]");
  }
}

}  // namespace

NoiseSchedule::NoiseSchedule(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("NoiseSchedule: epsilon must lie in (0, 1)");
  }
}

double NoiseSchedule::sigma_bar(double t) const {
  return -std::log1p(-(1.0 - epsilon_) * t);
}

double NoiseSchedule::mask_prob(double t) const {
  return (1.0 - epsilon_) * t;
}

double NoiseSchedule::ratio(double t) const {
  const double p = mask_prob(t);
  return (1.0 - p) / p;
}

double NoiseSchedule::log_ratio(double t) const {
  const double p = mask_prob(t);
  return std::log1p(-p) - std::log(p);
}

TokenSequence forward_corrupt(const TokenSequence& x0, double t,
                              const NoiseSchedule& schedule,
                              const Vocabulary& vocab, Rng& rng,
                              std::span<const bool> exempt) {
  check_time(t, "forward_corrupt");
  if (!exempt.empty() && exempt.size() != x0.size()) {
    throw DomainError("forward_corrupt: exemption list length mismatch");
  }
  const double p = schedule.mask_prob(t);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TokenSequence out = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (x0[i] == vocab.mask()) {
      throw DomainError("forward_corrupt: clean sequence contains MASK");
    }
    const bool skip = exempt.empty() ? x0[i] == vocab.pad() : exempt[i];
    if (skip) continue;
    if (unif(rng) < p) out[i] = vocab.mask();
  }
  return out;
}

TokenLoss token_loss_from_log_scores(const ScoreTable& log_scores,
                                     const TokenSequence& x_t,
                                     const TokenSequence& x0, double t,
                                     const NoiseSchedule& schedule,
                                     const Vocabulary& vocab,
                                     TokenLossWeight weight) {
  TokenLoss out;
  out.grad_log_scores = ScoreTable::Zero(log_scores.rows(), log_scores.cols());
  const TokenId mask = vocab.mask();
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (x_t[i] == mask) ++out.masked;
  }
  if (out.masked == 0) return out;

  const double r = schedule.ratio(t);
  const double w = weight == TokenLossWeight::kConstant ? 1.0 : 1.0 / r;
  const double scale = w / out.masked;
  double total = 0.0;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (x_t[i] != mask) continue;
    const auto row = log_scores.row(static_cast<Eigen::Index>(i));
    auto grad = out.grad_log_scores.row(static_cast<Eigen::Index>(i));
    double sum = 0.0;
    for (int y = 0; y < vocab.size; ++y) {
      if (y == mask) continue;
      const double s = std::exp(row(y));
      sum += s;
      grad(y) = scale * s;
    }
    const TokenId truth = x0[i];
    total += sum - r * row(truth);
    grad(truth) -= scale * r;
  }
  out.value = total * scale;
  return out;
}

double token_loss(const ScoreTable& scores, const TokenSequence& x_t,
                  const TokenSequence& x0, double t,
                  const NoiseSchedule& schedule, const Vocabulary& vocab,
                  TokenLossWeight weight) {
  const TokenId mask = vocab.mask();
  int masked = 0;
  for (TokenId x : x_t) masked += x == mask ? 1 : 0;
  if (masked == 0) return 0.0;
  const double r = schedule.ratio(t);
  const double w = weight == TokenLossWeight::kConstant ? 1.0 : 1.0 / r;
  double total = 0.0;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (x_t[i] != mask) continue;
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    const double truth = row(x0[i]);
    if (!(truth > 0.0)) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int y = 0; y < vocab.size; ++y) {
      if (y != mask) sum += row(y);
    }
    total += w * (sum - r * std::log(truth));
  }
  return total / masked;
}

std::vector<double> reverse_transition(std::span<const double> score_row,
                                       double t, double dt,
                                       const NoiseSchedule& schedule,
                                       const Vocabulary& vocab, bool anneal,
                                       bool* renormalized) {
  const TokenId mask = vocab.mask();
  const double leap = schedule.sigma_bar(t) - schedule.sigma_bar(t - dt);
  std::vector<double> probs(static_cast<std::size_t>(vocab.size), 0.0);
  double moved = 0.0;
  for (int y = 0; y < vocab.size; ++y) {
    if (y == mask) continue;
    probs[y] = leap * score_row[y];
    moved += probs[y];
  }
  if (renormalized != nullptr) *renormalized = false;
  if (moved > 1.0) {
    for (double& p : probs) p /= moved;
    moved = 1.0;
    if (renormalized != nullptr) *renormalized = true;
  }
  if (anneal && moved > 0.0) {
    int best = -1;
    for (int y = 0; y < vocab.size; ++y) {
      if (y == mask) continue;
      if (best < 0 || probs[y] > probs[best]) best = y;
    }
    std::fill(probs.begin(), probs.end(), 0.0);
    probs[best] = moved;
  }
  probs[mask] = 1.0 - moved;
  return probs;
}

TokenSequence reverse_token_step(const ScoreTable& scores,
                                 const TokenSequence& x_t, double t, double dt,
                                 const NoiseSchedule& schedule,
                                 const Vocabulary& vocab, bool anneal, Rng& rng,
                                 ReverseStepStats* stats) {
  check_time(t, "reverse_token_step");
  if (!(dt > 0.0) || dt > t + 1e-12) {
    throw DomainError("reverse_token_step: need 0 < dt <= t");
  }
  dt = std::min(dt, t);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TokenSequence out = x_t;
  const TokenId mask = vocab.mask();
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (x_t[i] != mask) continue;
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    bool renorm = false;
    const auto probs = reverse_transition(
        std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
        t, dt, schedule, vocab, anneal, &renorm);
    if (renorm && stats != nullptr) ++stats->renormalized;
    const double u = unif(rng);
    double acc = 0.0;
    for (int y = 0; y < vocab.size; ++y) {
      if (y == mask) continue;
      acc += probs[y];
      if (u < acc) {
        out[i] = y;
        break;
      }
    }
  }
  return out;
}

TokenSequence finalize_tokens(const TokenSequence& x, const ScoreTable& scores,
                              const Vocabulary& vocab) {
  TokenSequence out = x;
  const TokenId mask = vocab.mask();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != mask) continue;
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    TokenId best = -1;
    for (int y = 0; y < vocab.size; ++y) {
      if (y == mask) continue;
      if (best < 0 || row(y) > row(best)) best = y;
    }
    out[i] = best;
  }
  return out;
}

}  // namespace otinfill
