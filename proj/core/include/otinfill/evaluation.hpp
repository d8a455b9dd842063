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
#ifndef OTINFILL_EVALUATION_HPP_
#define OTINFILL_EVALUATION_HPP_

#include <string>
#include <vector>

#include "otinfill/types.hpp"

namespace otinfill {

// True iff `prompt` occurs in `output` as an order-preserving subsequence.
bool success(const TokenSequence& prompt, const TokenSequence& output);

// Corpus BLEU (0-100) with uniform weights over orders 1..n, clipped counts,
// brevity penalty and no smoothing. One reference per candidate.
double bleu_n(const std::vector<TokenSequence>& candidates,
              const std::vector<TokenSequence>& references, int n);

// Corpus NIST: information-weighted co-occurrence summed over orders 1..n,
// times the NIST brevity factor (0.5 at a length ratio of 2/3). Information
// weights are estimated on the references.
double nist_n(const std::vector<TokenSequence>& candidates,
              const std::vector<TokenSequence>& references, int n);

// Unique n-grams / total n-grams over the whole corpus.
double distinct_n(const std::vector<TokenSequence>& outputs, int n);

struct EvalReport {
  double bleu2 = 0.0;
  double bleu4 = 0.0;
  double nist2 = 0.0;
  double nist4 = 0.0;
  double success_rate = 0.0;  // fraction in [0, 1]
  double d2 = 0.0;            // NaN when no output has a bigram
  double d4 = 0.0;
  int n_samples = 0;

  std::string to_record() const;  // single tab-separated line
  std::string to_table() const;
  static std::string record_header();
};

// Prompts may be empty, in which case every sample succeeds.
EvalReport evaluate(const std::vector<TokenSequence>& generated,
                    const std::vector<TokenSequence>& references,
                    const std::vector<TokenSequence>& prompts);

}  // namespace otinfill

#endif  // OTINFILL_EVALUATION_HPP_
