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

#include <algorithm>
#include <cmath>
#include <vector>

#include "otinfill/errors.hpp"
#include "otinfill/evaluation.hpp"

namespace otinfill {
namespace {

// Three-pair mini-corpus used by the BLEU and NIST checks.
//   cand [1 2 3 4]  ref [1 2 3 4]
//   cand [1 2 5]    ref [1 2 3 5]
//   cand [6 6 6]    ref [6 7]
// Clipped matches / candidate n-grams: 1-grams 8/10, 2-grams 4/7,
// 3-grams 2/4, 4-grams 1/1. Lengths c = r = 10, so BP = 1.
//   BLEU-2 = 100 * (0.8 * 4/7)^(1/2)
//   BLEU-4 = 100 * (0.8 * 4/7 * 0.5 * 1)^(1/4)
// NIST information uses reference counts (10 reference words):
//   unigrams: info(1) = info(2) = info(3) = log2(10/2), info(4) = info(5) =
//   info(6) = log2(10); matched sum (3+2) log2 5 + 3 log2 10 over 10 words.
//   bigrams: (1 2), (2 3) carry 0 bits, (3 4) one bit; 1 bit over 7.
//   trigrams: (1 2 3) 0 bits, (2 3 4) 1 bit; 1 bit over 4.
//   4-gram (1 2 3 4): log2(2/1) = 1 bit over 1.
const std::vector<TokenSequence> kCand{{1, 2, 3, 4}, {1, 2, 5}, {6, 6, 6}};
const std::vector<TokenSequence> kRef{{1, 2, 3, 4}, {1, 2, 3, 5}, {6, 7}};

TEST(Success, TrivialCases) {
  EXPECT_TRUE(success({1, 2}, {9, 1, 8, 2, 7}));
  EXPECT_FALSE(success({1, 2}, {2, 1}));
  EXPECT_TRUE(success({}, {3, 4}));
  EXPECT_TRUE(success({}, {}));
}

TEST(Success, MonotoneUnderInsertion) {
  const TokenSequence prompt{4, 4, 2};
  TokenSequence out{4, 1, 4, 2};
  ASSERT_TRUE(success(prompt, out));
  for (int k = 0; k < 5; ++k) {
    out.insert(out.begin() + k, 9);
    EXPECT_TRUE(success(prompt, out));
  }
  EXPECT_FALSE(success(prompt, {4, 2}));
}

TEST(Bleu, PerfectAndDisjoint) {
  EXPECT_DOUBLE_EQ(bleu_n(kRef, kRef, 2), 100.0);
  EXPECT_DOUBLE_EQ(bleu_n(kRef, kRef, 4), 100.0);
  EXPECT_EQ(bleu_n({{8, 9}}, {{1, 2}}, 2), 0.0);
}

TEST(Bleu, MiniCorpusHandComputed) {
  EXPECT_NEAR(bleu_n(kCand, kRef, 2), 100.0 * std::sqrt(0.8 * 4.0 / 7.0), 1e-9);
  EXPECT_NEAR(bleu_n(kCand, kRef, 2), 67.612340378281317, 1e-9);
  EXPECT_NEAR(bleu_n(kCand, kRef, 4), 69.144156928388199, 1e-9);
}

TEST(Bleu, BrevityPenalty) {
  // c = 2, r = 4: every n-gram matches, BP = exp(1 - 4/2).
  EXPECT_NEAR(bleu_n({{1, 2}}, {{1, 2, 3, 4}}, 2), 100.0 * std::exp(-1.0),
              1e-9);
}

TEST(Bleu, EmptyCorpusThrows) {
  EXPECT_THROW(bleu_n({}, {}, 2), MetricError);
  EXPECT_THROW(bleu_n({{1}}, {{1}, {2}}, 2), MetricError);
}

TEST(Nist, SinglePairIsSumOfInformation) {
  // All four reference tokens are unique: each unigram carries log2(4) bits,
  // every higher-order n-gram carries log2(1) = 0 bits.
  const std::vector<TokenSequence> c{{1, 2, 3, 4}};
  EXPECT_NEAR(nist_n(c, c, 2), 2.0, 1e-9);
  EXPECT_NEAR(nist_n(c, c, 4), 2.0, 1e-9);
}

TEST(Nist, MiniCorpusHandComputed) {
  const double uni = (5.0 * std::log2(5.0) + 3.0 * std::log2(10.0)) / 10.0;
  EXPECT_NEAR(nist_n(kCand, kRef, 2), uni + 1.0 / 7.0, 1e-9);
  EXPECT_NEAR(nist_n(kCand, kRef, 2), 2.300399618767032, 1e-9);
  EXPECT_NEAR(nist_n(kCand, kRef, 4), uni + 1.0 / 7.0 + 0.25 + 1.0, 1e-9);
  EXPECT_NEAR(nist_n(kCand, kRef, 4), 3.550399618767032, 1e-9);
}

TEST(Nist, NoOverlapIsZero) {
  EXPECT_EQ(nist_n({{8, 9}}, {{1, 2}}, 2), 0.0);
}

TEST(Nist, DuplicatingCorpusIsInvariant) {
  auto c2 = kCand, r2 = kRef;
  c2.insert(c2.end(), kCand.begin(), kCand.end());
  r2.insert(r2.end(), kRef.begin(), kRef.end());
  EXPECT_NEAR(nist_n(c2, r2, 2), nist_n(kCand, kRef, 2), 1e-12);
  EXPECT_NEAR(nist_n(c2, r2, 4), nist_n(kCand, kRef, 4), 1e-12);
}

TEST(Nist, BrevityFactor) {
  // Length ratio 2/3 gives a factor of exactly one half.
  const std::vector<TokenSequence> r{{1, 2, 3}};
  const std::vector<TokenSequence> c{{1, 2}};
  const double full = std::log2(3.0) * 2.0 / 2.0;  // unigram term only
  EXPECT_NEAR(nist_n(c, r, 1), 0.5 * full, 1e-12);
}

TEST(Distinct, Examples) {
  EXPECT_NEAR(distinct_n({{0, 1, 0, 1}}, 2), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(distinct_n({{5, 5, 5}, {5, 5}}, 2), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(distinct_n({{1, 2, 3}, {4, 5, 6}}, 2), 1.0);
  EXPECT_THROW(distinct_n({{1}, {2}}, 2), MetricError);
}

TEST(Distinct, PermutationInvariant) {
  std::vector<TokenSequence> c{{1, 2, 3, 1, 2}, {2, 3, 4}, {1, 2}};
  const double a = distinct_n(c, 2);
  std::reverse(c.begin(), c.end());
  EXPECT_EQ(distinct_n(c, 2), a);
}

TEST(Evaluate, ReportFields) {
  const auto r = evaluate(kRef, kRef, {});
  EXPECT_DOUBLE_EQ(r.bleu2, 100.0);
  EXPECT_DOUBLE_EQ(r.success_rate, 1.0);
  EXPECT_EQ(r.n_samples, 3);
  const auto s = evaluate(kCand, kRef, {{1, 2}, {3}, {6}});
  EXPECT_NEAR(s.success_rate, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.bleu4, 69.144156928388199, 1e-9);
  // One field per header column.
  auto count_tabs = [](const std::string& x) {
    return std::count(x.begin(), x.end(), '\t');
  };
  EXPECT_EQ(count_tabs(s.to_record()), count_tabs(EvalReport::record_header()));
  EXPECT_THROW(evaluate(kCand, kRef, {{1}}), MetricError);
}

TEST(Evaluate, NoBigramsGivesNaNDiversity) {
  const auto r = evaluate({{1}, {2}}, {{1}, {2}}, {});
  EXPECT_TRUE(std::isnan(r.d2));
}

}  // namespace
}  // namespace otinfill
