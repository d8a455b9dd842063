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
#include "otinfill/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace {

using NGram = std::vector<TokenId>;
using NGramCounts = std::map<NGram, int>;

NGramCounts count_ngrams(const TokenSequence& s, int n) {
  NGramCounts out;
  if (static_cast<int>(s.size()) < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[NGram(s.begin() + i, s.begin() + i + n)];
  }
  return out;
}

void check_corpus(const std::vector<TokenSequence>& c,
                  const std::vector<TokenSequence>& r, int n, const char* what) {
  if (c.empty()) throw MetricError(std::string(what) + ": empty corpus");
  if (c.size() != r.size()) {
    throw MetricError(std::string(what) + ": " + std::to_string(c.size()) +
                      " candidates vs " + std::to_string(r.size()) +
                      " references");
  }
  if (n < 1) throw MetricError(std::string(what) + ": order must be >= 1");
}

}  // namespace

bool success(const TokenSequence& prompt, const TokenSequence& output) {
  std::size_t k = 0;
  for (TokenId t : output) {
    if (k < prompt.size() && prompt[k] == t) ++k;
  }
  return k == prompt.size();
}

double bleu_n(const std::vector<TokenSequence>& candidates,
              const std::vector<TokenSequence>& references, int n) {
  check_corpus(candidates, references, n, "bleu");
  std::vector<double> matched(n, 0.0), total(n, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (int k = 1; k <= n; ++k) {
      const auto cand = count_ngrams(candidates[i], k);
      const auto ref = count_ngrams(references[i], k);
      for (const auto& [g, c] : cand) {
        total[k - 1] += c;
        if (auto it = ref.find(g); it != ref.end()) {
          matched[k - 1] += std::min(c, it->second);
        }
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (matched[k] == 0.0 || total[k] == 0.0) return 0.0;
    log_sum += std::log(matched[k] / total[k]) / n;
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return 100.0 * bp * std::exp(log_sum);
}

double nist_n(const std::vector<TokenSequence>& candidates,
              const std::vector<TokenSequence>& references, int n) {
  check_corpus(candidates, references, n, "nist");
  // Reference n-gram counts for orders 1..n.
  std::vector<NGramCounts> ref_counts(n + 1);
  double ref_words = 0.0;
  for (const auto& r : references) {
    ref_words += static_cast<double>(r.size());
    for (int k = 1; k <= n; ++k) {
      for (const auto& [g, c] : count_ngrams(r, k)) ref_counts[k][g] += c;
    }
  }
  auto info = [&](const NGram& g) {
    const int k = static_cast<int>(g.size());
    const double num =
        k == 1 ? ref_words
               : static_cast<double>(
                     ref_counts[k - 1].at(NGram(g.begin(), g.end() - 1)));
    return std::log2(num / ref_counts[k].at(g));
  };

  double score = 0.0;
  double cand_words = 0.0;
  for (const auto& c : candidates) cand_words += static_cast<double>(c.size());
  for (int k = 1; k <= n; ++k) {
    double weighted = 0.0, total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto cand = count_ngrams(candidates[i], k);
      const auto ref = count_ngrams(references[i], k);
      for (const auto& [g, c] : cand) {
        total += c;
        if (auto it = ref.find(g); it != ref.end()) {
          weighted += std::min(c, it->second) * info(g);
        }
      }
    }
    if (total > 0.0) score += weighted / total;
  }
  if (ref_words == 0.0 || cand_words == 0.0) return 0.0;
  const double beta = std::log(0.5) / std::pow(std::log(1.5), 2);
  const double ratio = std::min(cand_words / ref_words, 1.0);
  return score * std::exp(beta * std::pow(std::log(ratio), 2));
}

double distinct_n(const std::vector<TokenSequence>& outputs, int n) {
  if (n < 1) throw MetricError("distinct: order must be >= 1");
  std::set<NGram> unique;
  double total = 0.0;
  for (const auto& s : outputs) {
    for (const auto& [g, c] : count_ngrams(s, n)) {
      unique.insert(g);
      total += c;
    }
  }
  if (total == 0.0) throw MetricError("distinct: corpus has no n-grams");
  return static_cast<double>(unique.size()) / total;
}

std::string EvalReport::record_header() {
  return "n_samples\tbleu2\tbleu4\tnist2\tnist4\tsuccess_rate\td2\td4";
}

std::string EvalReport::to_record() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f",
                n_samples, bleu2, bleu4, nist2, nist4, success_rate, d2, d4);
  return buf;
}

std::string EvalReport::to_table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "+---------+----------+\n"
                "| metric  |    value |\n"
                "+---------+----------+\n"
                "| samples | %8d |\n"
                "| BLEU-2  | %8.2f |\n"
                "| BLEU-4  | %8.2f |\n"
                "| NIST-2  | %8.3f |\n"
                "| NIST-4  | %8.3f |\n"
                "| SR (%%)  | %8.2f |\n"
                "| D2 (%%)  | %8.2f |\n"
                "| D4 (%%)  | %8.2f |\n"
                "+---------+----------+\n",
                n_samples, bleu2, bleu4, nist2, nist4, 100.0 * success_rate,
                100.0 * d2, 100.0 * d4);
  return buf;
}

EvalReport evaluate(const std::vector<TokenSequence>& generated,
                    const std::vector<TokenSequence>& references,
                    const std::vector<TokenSequence>& prompts) {
  if (!prompts.empty() && prompts.size() != generated.size()) {
    throw MetricError("evaluate: prompt count does not match generations");
  }
  EvalReport r;
  r.n_samples = static_cast<int>(generated.size());
  r.bleu2 = bleu_n(generated, references, 2);
  r.bleu4 = bleu_n(generated, references, 4);
  r.nist2 = nist_n(generated, references, 2);
  r.nist4 = nist_n(generated, references, 4);
  int ok = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    if (prompts.empty() || success(prompts[i], generated[i])) ++ok;
  }
  r.success_rate = static_cast<double>(ok) / generated.size();
  auto distinct_or_nan = [&](int n) {
    try {
      return distinct_n(generated, n);
    } catch (const MetricError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  r.d2 = distinct_or_nan(2);
  r.d4 = distinct_or_nan(4);
  return r;
}

}  // namespace otinfill
