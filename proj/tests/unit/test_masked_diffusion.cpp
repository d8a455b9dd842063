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
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "otinfill/errors.hpp"
#include "otinfill/masked_diffusion.hpp"

namespace otinfill {
namespace {

// Ordinary tokens a = 0, b = 1; PAD = 2; MASK = 3.
const Vocabulary kVocab{4};

TEST(NoiseSchedule, Endpoints) {
  NoiseSchedule s(1e-3);
  EXPECT_EQ(s.sigma_bar(0.0), 0.0);
  EXPECT_DOUBLE_EQ(s.mask_prob(1.0), 0.999);
  EXPECT_DOUBLE_EQ(s.mask_prob(0.5), 0.4995);
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = s.sigma_bar(k / 100.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(NoiseSchedule, RatioMatchesDefinition) {
  NoiseSchedule s(1e-3);
  for (double t : {0.1, 0.5, 0.9, 1.0}) {
    const double e = std::exp(-s.sigma_bar(t));
    EXPECT_NEAR(s.ratio(t), e / (1.0 - e), 1e-12 * s.ratio(t));
    EXPECT_NEAR(s.log_ratio(t), std::log(s.ratio(t)), 1e-12);
  }
}

TEST(ForwardCorrupt, ZeroTimeIsIdentity) {
  NoiseSchedule s;
  Rng rng(1);
  TokenSequence x{0, 1, 0, 2, 1};
  EXPECT_EQ(forward_corrupt(x, 0.0, s, kVocab, rng), x);
}

TEST(ForwardCorrupt, RejectsBadInput) {
  NoiseSchedule s;
  Rng rng(1);
  TokenSequence x{0, 1};
  EXPECT_THROW(forward_corrupt(x, -0.1, s, kVocab, rng), DomainError);
  EXPECT_THROW(forward_corrupt(x, 1.1, s, kVocab, rng), DomainError);
  TokenSequence masked{0, kVocab.mask()};
  EXPECT_THROW(forward_corrupt(masked, 0.5, s, kVocab, rng), DomainError);
}

TEST(ForwardCorrupt, PadExemptByDefault) {
  NoiseSchedule s;
  Rng rng(3);
  TokenSequence x(200, kVocab.pad());
  EXPECT_EQ(forward_corrupt(x, 1.0, s, kVocab, rng), x);
}

TEST(ForwardCorrupt, ExplicitExemption) {
  NoiseSchedule s;
  Rng rng(3);
  TokenSequence x{0, 1, 2, 0};
  const bool exempt[] = {true, false, false, true};
  int masked_pad = 0;
  for (int k = 0; k < 200; ++k) {
    const auto y = forward_corrupt(x, 1.0, s, kVocab, rng, exempt);
    EXPECT_EQ(y[0], 0);
    EXPECT_EQ(y[3], 0);
    masked_pad += y[2] == kVocab.mask();
  }
  EXPECT_GT(masked_pad, 150);
}

TEST(ForwardCorrupt, MonteCarloMaskFraction) {
  NoiseSchedule s;
  for (double t : {0.25, 0.5, 0.75}) {
    Rng rng(static_cast<std::uint64_t>(t * 1000));
    const int n = 100000;
    TokenSequence x(n, 0);
    const auto y = forward_corrupt(x, t, s, kVocab, rng);
    int masked = 0;
    for (TokenId v : y) masked += v == kVocab.mask();
    const double p = s.mask_prob(t);
    const double sigma = std::sqrt(n * p * (1.0 - p));
    EXPECT_LE(std::fabs(masked - n * p), 3.0 * sigma) << "t=" << t;
  }
}

TEST(TokenLoss, NoMaskedSlotsIsZero) {
  NoiseSchedule s;
  ScoreTable scores = ScoreTable::Constant(2, 4, 0.5);
  TokenSequence x{0, 1};
  EXPECT_EQ(token_loss(scores, x, x, 0.5, s, kVocab), 0.0);
}

TEST(TokenLoss, DirectEvaluation) {
  NoiseSchedule s;
  // exp(-sigma_bar) = 0.5 makes the ratio exactly one.
  const double t = 0.5 / (1.0 - s.epsilon());
  ASSERT_NEAR(s.ratio(t), 1.0, 1e-12);
  ScoreTable scores(1, 4);
  scores << 1.0, 0.1, 0.0, 7.0;
  TokenSequence xt{kVocab.mask()};
  TokenSequence x0{0};
  EXPECT_NEAR(token_loss(scores, xt, x0, t, s, kVocab), 1.1, 1e-12);
}

TEST(TokenLoss, ZeroTrueScoreIsInfinite) {
  NoiseSchedule s;
  ScoreTable scores(1, 4);
  scores << 0.0, 0.1, 0.1, 1.0;
  TokenSequence xt{kVocab.mask()};
  TokenSequence x0{0};
  EXPECT_EQ(token_loss(scores, xt, x0, 0.5, s, kVocab),
            std::numeric_limits<double>::infinity());
}

TEST(TokenLoss, IgnoresUnmaskedRows) {
  NoiseSchedule s;
  ScoreTable a = ScoreTable::Constant(3, 4, 0.3);
  ScoreTable b = a;
  b.row(1).setConstant(123.0);
  TokenSequence xt{kVocab.mask(), 1, kVocab.mask()};
  TokenSequence x0{0, 1, 1};
  EXPECT_EQ(token_loss(a, xt, x0, 0.7, s, kVocab),
            token_loss(b, xt, x0, 0.7, s, kVocab));
}

TEST(TokenLoss, LogScoreGradientMatchesFiniteDifference) {
  NoiseSchedule s;
  Rng rng(9);
  std::normal_distribution<double> n01;
  ScoreTable logs(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) logs(i, j) = n01(rng);
  TokenSequence xt{kVocab.mask(), 1, kVocab.mask()};
  TokenSequence x0{0, 1, 2};
  for (auto w : {TokenLossWeight::kConstant, TokenLossWeight::kInverseRatio}) {
    const auto res = token_loss_from_log_scores(logs, xt, x0, 0.6, s, kVocab, w);
    EXPECT_EQ(res.masked, 2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        auto f = [&] {
          return token_loss_from_log_scores(logs, xt, x0, 0.6, s, kVocab, w)
              .value;
        };
        const double fd = oracles::central_difference(f, logs(i, j), 1e-6);
        EXPECT_NEAR(res.grad_log_scores(i, j), fd, 1e-8);
      }
    }
    ScoreTable scores = logs.array().exp().matrix();
    EXPECT_NEAR(res.value, token_loss(scores, xt, x0, 0.6, s, kVocab, w),
                1e-12);
  }
}

TEST(TokenLoss, ExpectedLossMinimizerMatchesAnalyticOracle) {
  // Minimize E_{x0 ~ p}[loss] over the log-scores of one masked slot by
  // gradient descent and compare with s* = r(t) p(y).
  NoiseSchedule s;
  const double t = 0.4;
  const std::vector<double> p{0.7, 0.3, 0.0};
  ScoreTable logs = ScoreTable::Zero(1, 4);
  TokenSequence xt{kVocab.mask()};
  for (int it = 0; it < 20000; ++it) {
    ScoreTable g = ScoreTable::Zero(1, 4);
    for (int y = 0; y < 3; ++y) {
      if (p[y] == 0.0) continue;
      const auto r = token_loss_from_log_scores(logs, xt, TokenSequence{y}, t,
                                                s, kVocab,
                                                TokenLossWeight::kConstant);
      g += p[y] * r.grad_log_scores;
    }
    logs -= 0.2 * g;
  }
  const auto want = oracles::analytic_score_min(p, t, s.epsilon());
  EXPECT_NEAR(std::exp(logs(0, 0)), want[0], 1e-6 * want[0]);
  EXPECT_NEAR(std::exp(logs(0, 1)), want[1], 1e-6 * want[1]);
  // The PAD score decays toward its zero optimum.
  EXPECT_LT(std::exp(logs(0, 2)), 1e-3);
}

TEST(ReverseTransition, ZeroLeapKeepsMask) {
  NoiseSchedule s;
  const std::vector<double> row{0.5, 0.5, 0.5, 0.5};
  const auto p = reverse_transition(row, 0.5, 0.0, s, kVocab, false);
  EXPECT_EQ(p[kVocab.mask()], 1.0);
  EXPECT_EQ(p[0] + p[1] + p[2], 0.0);
}

TEST(ReverseTransition, AnnealCollapsesOntoArgmax) {
  NoiseSchedule s;
  const double t = 0.5, dt = 0.1;
  const double leap = s.sigma_bar(t) - s.sigma_bar(t - dt);
  const std::vector<double> row{0.3 / leap, 0.2 / leap, 0.0, 1.0};
  const auto plain = reverse_transition(row, t, dt, s, kVocab, false);
  EXPECT_NEAR(plain[0], 0.3, 1e-12);
  EXPECT_NEAR(plain[1], 0.2, 1e-12);
  EXPECT_NEAR(plain[3], 0.5, 1e-12);
  const auto hot = reverse_transition(row, t, dt, s, kVocab, true);
  EXPECT_NEAR(hot[0], 0.5, 1e-12);
  EXPECT_EQ(hot[1], 0.0);
  EXPECT_EQ(hot[2], 0.0);
  EXPECT_NEAR(hot[3], 0.5, 1e-12);
}

TEST(ReverseTransition, ExcessMassIsRenormalized) {
  NoiseSchedule s;
  const std::vector<double> row{1e6, 1e6, 0.0, 1.0};
  bool renorm = false;
  const auto p = reverse_transition(row, 0.9, 0.5, s, kVocab, false, &renorm);
  EXPECT_TRUE(renorm);
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_EQ(p[3], 0.0);

  ScoreTable scores(1, 4);
  scores << 1e6, 1e6, 0.0, 1.0;
  Rng rng(0);
  ReverseStepStats stats;
  reverse_token_step(scores, TokenSequence{kVocab.mask()}, 0.9, 0.5, s, kVocab,
                     false, rng, &stats);
  EXPECT_EQ(stats.renormalized, 1);
}

TEST(ReverseTokenStep, MonteCarloMatchesTransition) {
  NoiseSchedule s;
  const double t = 0.8, dt = 0.2;
  ScoreTable scores(1, 4);
  scores << 0.9, 0.4, 0.05, 1.0;
  const auto p = reverse_transition(
      std::vector<double>{0.9, 0.4, 0.05, 1.0}, t, dt, s, kVocab, false);
  Rng rng(17);
  const int n = 100000;
  int to_a = 0;
  for (int k = 0; k < n; ++k) {
    to_a += reverse_token_step(scores, TokenSequence{kVocab.mask()}, t, dt, s,
                               kVocab, false, rng)[0] == 0;
  }
  const double sigma = std::sqrt(n * p[0] * (1.0 - p[0]));
  EXPECT_LE(std::fabs(to_a - n * p[0]), 3.0 * sigma);
}

TEST(ReverseTokenStep, NeverRemasksAndCountDoesNotGrow) {
  NoiseSchedule s;
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  TokenSequence x(16, kVocab.mask());
  x[3] = 0;
  x[7] = 1;
  ScoreTable scores(16, 4);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 4; ++j) scores(i, j) = u(rng);
  int prev = 16;
  const int n = 10;
  for (int k = 0; k < n; ++k) {
    const double t = 1.0 - static_cast<double>(k) / n;
    const auto y = reverse_token_step(scores, x, t, 1.0 / n, s, kVocab, false,
                                      rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] != kVocab.mask()) EXPECT_EQ(y[i], x[i]);
    }
    int count = 0;
    for (TokenId v : y) count += v == kVocab.mask();
    EXPECT_LE(count, prev);
    prev = count;
    x = y;
  }
}

TEST(ReverseTokenStep, RejectsStepLargerThanTime) {
  NoiseSchedule s;
  Rng rng(0);
  ScoreTable scores = ScoreTable::Constant(1, 4, 1.0);
  EXPECT_THROW(reverse_token_step(scores, TokenSequence{3}, 0.2, 0.5, s, kVocab,
                                  false, rng),
               DomainError);
}

TEST(FinalizeTokens, Rules) {
  ScoreTable scores(3, 4);
  scores << 0.1, 0.9, 0.2, 5.0,  //
      0.5, 0.5, 0.5, 5.0,        //
      0.3, 0.3, 0.3, 0.3;
  const TokenId m = kVocab.mask();
  EXPECT_EQ(finalize_tokens(TokenSequence{0, 1, 2}, scores, kVocab),
            (TokenSequence{0, 1, 2}));
  EXPECT_EQ(finalize_tokens(TokenSequence{m, 1, 0}, scores, kVocab),
            (TokenSequence{1, 1, 0}));
  EXPECT_EQ(finalize_tokens(TokenSequence{m, m, m}, scores, kVocab),
            (TokenSequence{1, 0, 0}));
}

}  // namespace
}  // namespace otinfill
