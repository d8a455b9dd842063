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
#ifndef OTINFILL_SAMPLER_HPP_
#define OTINFILL_SAMPLER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otinfill/denoiser.hpp"
#include "otinfill/position_diffusion.hpp"
#include "otinfill/random.hpp"

namespace otinfill {

struct SampleConfig {
  int num_steps = 32;
  LimitMode zT_mode = LimitMode::kUniform;
  bool anneal = false;
  bool trace = false;
  std::uint64_t seed = 0;
};

struct TraceSnapshot {
  int step = 0;
  double t = 1.0;
  std::vector<double> positions;
  std::vector<SlotClass> classes;
  std::vector<bool> masked;
};

// N + 1 snapshots with t strictly decreasing from 1 to 0.
struct PathTrace {
  std::vector<TraceSnapshot> snapshots;

  // Columns: step, t, slot, class, position, is_masked (tab separated, with
  // a header row).
  std::string to_tsv() const;
};

struct SampleResult {
  TokenSequence output;     // decoded, PAD dropped
  DiffusionState final_state;
  std::optional<PathTrace> trace;
  int renormalized = 0;     // tau-leaping steps whose unmask mass exceeded 1
};

// State at t = 1. Prompt slots hold the prompt tokens in ascending position
// order; all other slots are MASK.
DiffusionState init_state(const TokenSequence& prompt, const SampleConfig& cfg,
                          int L, const Vocabulary& vocab, Rng& rng);

// Sorts slots by position (ties by slot index) and drops PAD and MASK.
TokenSequence decode(const DiffusionState& state, const Vocabulary& vocab);

// N equal steps from t = 1 to 0 of simultaneous token tau-leaping and
// position Euler updates, then finalize and decode. Prompt positions move;
// prompt tokens are never resampled.
SampleResult sample(const ParameterSet& params, const TokenSequence& prompt,
                    const SampleConfig& cfg, Rng& rng);

// Convenience: one stream per prompt, derived from cfg.seed and the index.
std::vector<SampleResult> sample_many(const ParameterSet& params,
                                      const std::vector<TokenSequence>& prompts,
                                      const SampleConfig& cfg);

}  // namespace otinfill

#endif  // OTINFILL_SAMPLER_HPP_
