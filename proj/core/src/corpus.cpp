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
#include "otinfill/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace grammar {
namespace {

struct Entry {
  const char* word;
  Category cat;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> kEntries = {
      {"the", Category::kDet},     {"a", Category::kDet},
      {"big", Category::kAdj},     {"small", Category::kAdj},
      {"red", Category::kAdj},     {"old", Category::kAdj},
      {"happy", Category::kAdj},   {"quiet", Category::kAdj},
      {"cat", Category::kNoun},    {"dog", Category::kNoun},
      {"bird", Category::kNoun},   {"man", Category::kNoun},
      {"woman", Category::kNoun},  {"child", Category::kNoun},
      {"car", Category::kNoun},    {"tree", Category::kNoun},
      {"house", Category::kNoun},  {"ball", Category::kNoun},
      {"sees", Category::kVerb},   {"likes", Category::kVerb},
      {"chases", Category::kVerb}, {"finds", Category::kVerb},
      {"takes", Category::kVerb},  {"holds", Category::kVerb},
      {"near", Category::kPrep},   {"under", Category::kPrep},
      {"with", Category::kPrep},   {"quickly", Category::kAdv},
      {"slowly", Category::kAdv},  {"today", Category::kAdv},
      {"again", Category::kAdv},
  };
  return kEntries;
}

std::vector<TokenId> ids_of(Category cat) {
  std::vector<TokenId> out;
  const auto& e = entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].cat == cat) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

TokenId pick(Category cat, Rng& rng) {
  const auto ids = ids_of(cat);
  std::uniform_int_distribution<std::size_t> d(0, ids.size() - 1);
  return ids[d(rng)];
}

bool coin(Rng& rng, double p) {
  std::bernoulli_distribution d(p);
  return d(rng);
}

void noun_phrase(TokenSequence& out, Rng& rng) {
  out.push_back(pick(Category::kDet, rng));
  int adjectives = 0;
  while (adjectives < 2 && coin(rng, 0.4)) {
    out.push_back(pick(Category::kAdj, rng));
    ++adjectives;
  }
  out.push_back(pick(Category::kNoun, rng));
}

// Recursive-descent recognizer; `pos` advances past what was consumed.
bool is(const TokenSequence& s, std::size_t pos, Category c) {
  return pos < s.size() && s[pos] >= 0 && s[pos] < lexicon_size() &&
         category_of(s[pos]) == c;
}

bool parse_np(const TokenSequence& s, std::size_t& pos) {
  if (!is(s, pos, Category::kDet)) return false;
  ++pos;
  int adjectives = 0;
  while (is(s, pos, Category::kAdj)) {
    ++pos;
    if (++adjectives > 2) return false;
  }
  if (!is(s, pos, Category::kNoun)) return false;
  ++pos;
  return true;
}

}  // namespace

const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> kWords = [] {
    std::vector<std::string> w;
    for (const auto& e : entries()) w.emplace_back(e.word);
    return w;
  }();
  return kWords;
}

Category category_of(TokenId id) { return entries().at(id).cat; }

int lexicon_size() { return static_cast<int>(entries().size()); }

TokenSequence sample_sentence(Rng& rng) {
  TokenSequence out;
  noun_phrase(out, rng);
  out.push_back(pick(Category::kVerb, rng));
  noun_phrase(out, rng);
  if (coin(rng, 0.3)) {
    out.push_back(pick(Category::kPrep, rng));
    noun_phrase(out, rng);
  }
  if (coin(rng, 0.3)) out.push_back(pick(Category::kAdv, rng));
  return out;
}

bool parses(const TokenSequence& s) {
  std::size_t pos = 0;
  if (!parse_np(s, pos)) return false;
  if (!is(s, pos, Category::kVerb)) return false;
  ++pos;
  if (!parse_np(s, pos)) return false;
  if (is(s, pos, Category::kPrep)) {
    ++pos;
    if (!parse_np(s, pos)) return false;
  }
  if (is(s, pos, Category::kAdv)) ++pos;
  return pos == s.size();
}

std::string to_words(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (TokenId t : seq) {
    if (!out.empty()) out += ' ';
    if (t == vocab.mask()) {
      out += "<mask>";
    } else if (t == vocab.pad()) {
      out += "<pad>";
    } else if (t >= 0 && t < lexicon_size()) {
      out += lexicon()[t];
    } else {
      out += "<" + std::to_string(t) + ">";
    }
  }
  return out;
}

}  // namespace grammar

void CorpusSpec::validate(int context_length) const {
  auto fail = [](const std::string& m) { throw FormatError("corpus: " + m); };
  if (size <= 0) fail("size must be positive");
  if (vocab_size < 3) fail("vocab_size must be >= 3");
  const Vocabulary vocab{vocab_size};
  if (kind == CorpusKind::kGrammar) {
    if (grammar::lexicon_size() > vocab.num_ordinary()) {
      fail("grammar lexicon needs " + std::to_string(grammar::lexicon_size()) +
           " ordinary tokens, vocabulary has " +
           std::to_string(vocab.num_ordinary()));
    }
    // Longest sentence: NP(4) V NP(4) P NP(4) ADV.
    if (context_length < 15) fail("context_length must be >= 15 for grammar");
    return;
  }
  if (min_length < 1 || min_length > max_length) {
    fail("need 1 <= min_length <= max_length");
  }
  if (max_length > context_length) {
    fail("max_length " + std::to_string(max_length) +
         " exceeds context_length " + std::to_string(context_length));
  }
  if (max_length > vocab.num_ordinary()) {
    fail("strictly increasing sequences of length " +
         std::to_string(max_length) + " need that many ordinary tokens");
  }
}

std::vector<TokenSequence> generate(const CorpusSpec& spec) {
  std::vector<TokenSequence> out;
  out.reserve(spec.size);
  const Vocabulary vocab{spec.vocab_size};
  std::vector<TokenId> pool(vocab.num_ordinary());
  for (int i = 0; i < spec.size; ++i) {
    Rng rng = make_rng(spec.seed, {0xc0, static_cast<std::uint64_t>(i)});
    if (spec.kind == CorpusKind::kGrammar) {
      out.push_back(grammar::sample_sentence(rng));
      continue;
    }
    std::uniform_int_distribution<int> len(spec.min_length, spec.max_length);
    const int l = len(rng);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < l; ++k) {
      std::uniform_int_distribution<int> d(k, static_cast<int>(pool.size()) - 1);
      std::swap(pool[k], pool[d(rng)]);
    }
    TokenSequence s(pool.begin(), pool.begin() + l);
    std::sort(s.begin(), s.end());
    out.push_back(std::move(s));
  }
  return out;
}

MaskResult apply_mask(const TokenSequence& x0, const MaskSpec& spec, Rng& rng) {
  const int l = static_cast<int>(x0.size());
  if (l < 1) throw EmptySequenceError("apply_mask: empty sequence");
  MaskResult out;
  if (spec.mode == MaskMode::kRandomKeywords) {
    const int hi = std::max(1, std::min(spec.max_keywords, l - 1));
    const int lo = std::clamp(spec.min_keywords, 1, hi);
    std::uniform_int_distribution<int> kd(lo, hi);
    const int k = kd(rng);
    std::vector<int> idx(l);
    std::iota(idx.begin(), idx.end(), 0);
    for (int j = 0; j < k; ++j) {
      std::uniform_int_distribution<int> d(j, l - 1);
      std::swap(idx[j], idx[d(rng)]);
    }
    out.prompt.assign(l, false);
    for (int j = 0; j < k; ++j) out.prompt[idx[j]] = true;
    out.num_prompt = k;
    return out;
  }
  std::uniform_int_distribution<int> bd(spec.min_block,
                                        std::max(spec.min_block, spec.max_block));
  const int span = std::min(bd(rng), l);
  std::uniform_int_distribution<int> sd(0, l - span);
  const int start = sd(rng);
  out.prompt.assign(l, true);
  for (int i = start; i < start + span; ++i) out.prompt[i] = false;
  out.num_prompt = l - span;
  return out;
}

int TrainingExample::num_prompt() const {
  return static_cast<int>(std::count(prompt.begin(), prompt.end(), true));
}

TokenSequence TrainingExample::prompt_tokens() const {
  TokenSequence out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (prompt[i]) out.push_back(tokens[i]);
  }
  return out;
}

std::vector<TrainingExample> make_examples(
    const std::vector<TokenSequence>& corpus, const MaskSpec& spec,
    std::uint64_t seed) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng rng = make_rng(seed, {0x3a5c, i});
    auto m = apply_mask(corpus[i], spec, rng);
    out.push_back({corpus[i], std::move(m.prompt)});
  }
  return out;
}

}  // namespace otinfill
