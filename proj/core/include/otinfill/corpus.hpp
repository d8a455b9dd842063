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
#ifndef OTINFILL_CORPUS_HPP_
#define OTINFILL_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "otinfill/random.hpp"
#include "otinfill/types.hpp"

// Synthetic corpora and the masking protocols that turn a clean sequence into
// an infilling example (observed prompt tokens + response to generate).
namespace otinfill {

enum class CorpusKind { kGrammar, kSortedIntegers };

struct CorpusSpec {
  CorpusKind kind = CorpusKind::kSortedIntegers;
  int vocab_size = 32;
  int min_length = 4;
  int max_length = 16;
  int size = 1000;
  std::uint64_t seed = 0;

  // Throws FormatError when the spec cannot be satisfied (e.g. the grammar
  // lexicon does not fit in the vocabulary).
  void validate(int context_length) const;
};

std::vector<TokenSequence> generate(const CorpusSpec& spec);

// Subject-verb-object grammar over a fixed lexicon:
//   S  -> NP V NP [PP] [ADV]
//   NP -> DET ADJ{0,2} N
//   PP -> P NP
// Token ids index the lexicon.
namespace grammar {

enum class Category { kDet, kAdj, kNoun, kVerb, kPrep, kAdv };

const std::vector<std::string>& lexicon();
Category category_of(TokenId id);
int lexicon_size();

TokenSequence sample_sentence(Rng& rng);
// Recognizer for the grammar above; used to check generated data.
bool parses(const TokenSequence& seq);
std::string to_words(const TokenSequence& seq, const Vocabulary& vocab);

}  // namespace grammar

enum class MaskMode { kRandomKeywords, kBlock };

struct MaskSpec {
  MaskMode mode = MaskMode::kRandomKeywords;
  int min_keywords = 1;
  int max_keywords = 6;
  int min_block = 0;
  int max_block = 32;  // usually L / 2
};

struct MaskResult {
  std::vector<bool> prompt;  // true where the token is observed
  int num_prompt = 0;
};

// random_keywords: k ~ U{min_keywords .. min(max_keywords, l - 1)} positions
// (at least one) chosen uniformly without replacement become the prompt.
// block: a contiguous response span of length ~ U{min_block .. max_block},
// clipped to l, at a uniform start; everything else is prompt.
MaskResult apply_mask(const TokenSequence& x0, const MaskSpec& spec, Rng& rng);

// A clean sequence with its observed (prompt) slots.
struct TrainingExample {
  TokenSequence tokens;
  std::vector<bool> prompt;

  int length() const { return static_cast<int>(tokens.size()); }
  int num_prompt() const;
  TokenSequence prompt_tokens() const;
};

// Applies apply_mask to every sequence with per-sequence streams.
std::vector<TrainingExample> make_examples(
    const std::vector<TokenSequence>& corpus, const MaskSpec& spec,
    std::uint64_t seed);

}  // namespace otinfill

#endif  // OTINFILL_CORPUS_HPP_
