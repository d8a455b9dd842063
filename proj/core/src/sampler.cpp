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
#include "otinfill/sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "otinfill/errors.hpp"
#include "otinfill/masked_diffusion.hpp"

namespace otinfill {
namespace {

TraceSnapshot snapshot(int step, double t, const DiffusionState& s,
                       const Vocabulary& vocab) {
  TraceSnapshot snap;
  snap.step = step;
  snap.t = t;
  snap.positions = s.positions;
  snap.classes = s.classes;
  snap.masked.resize(s.tokens.size());
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    snap.masked[i] = s.tokens[i] == vocab.mask();
  }
  return snap;
}

}  // namespace

std::string PathTrace::to_tsv() const {
  std::string out = "step\tt\tslot\tclass\tposition\tis_masked\n";
  char buf[128];
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d\t%.10g\t%zu\t%s\t%.10g\t%d\n", s.step,
                    s.t, i, std::string(to_string(s.classes[i])).c_str(),
                    s.positions[i], s.masked[i] ? 1 : 0);
      out += buf;
    }
  }
  return out;
}

DiffusionState init_state(const TokenSequence& prompt, const SampleConfig& cfg,
                          int L, const Vocabulary& vocab, Rng& rng) {
  const int lp = static_cast<int>(prompt.size());
  if (lp > L) {
    throw CapacityError("prompt of " + std::to_string(lp) +
                        " tokens exceeds L=" + std::to_string(L));
  }
  const PositionVector zT = cfg.zT_mode == LimitMode::kRandom
                                ? sample_zT_random(L, lp, rng)
                                : sample_zT_uniform(L, lp);
  DiffusionState s;
  s.t = 1.0;
  s.positions = zT.values;
  s.classes = zT.classes;
  s.tokens.assign(L, vocab.mask());

  std::vector<int> prompt_slots;
  for (int i = 0; i < L; ++i) {
    if (zT.classes[i] == SlotClass::kPrompt) prompt_slots.push_back(i);
  }
  std::stable_sort(prompt_slots.begin(), prompt_slots.end(), [&](int a, int b) {
    return zT.values[a] < zT.values[b];
  });
  for (int k = 0; k < lp; ++k) s.tokens[prompt_slots[k]] = prompt[k];
  return s;
}

TokenSequence decode(const DiffusionState& state, const Vocabulary& vocab) {
  std::vector<std::size_t> order(state.tokens.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.positions[a] < state.positions[b];
  });
  TokenSequence out;
  for (std::size_t i : order) {
    const TokenId t = state.tokens[i];
    if (t == vocab.pad() || t == vocab.mask()) continue;
    out.push_back(t);
  }
  return out;
}

SampleResult sample(const ParameterSet& params, const TokenSequence& prompt,
                    const SampleConfig& cfg, Rng& rng) {
  if (cfg.num_steps < 1) throw DomainError("sample: num_steps must be >= 1");
  const DenoiserConfig& model = params.config;
  const Vocabulary vocab = model.vocab();
  const NoiseSchedule schedule(model.noise_epsilon);
  const int n = cfg.num_steps;
  const double dt = 1.0 / n;

  SampleResult result;
  DiffusionState state = init_state(prompt, cfg, model.context_length, vocab, rng);
  if (cfg.trace) {
    result.trace.emplace();
    result.trace->snapshots.push_back(snapshot(0, 1.0, state, vocab));
  }

  ReverseStepStats stats;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(n - k) / n;
    state.t = t;
    const DenoiserOutput out = forward(params, state, nullptr);
    state.tokens = reverse_token_step(out.scores, state.tokens, t, dt, schedule,
                                      vocab, cfg.anneal, rng, &stats);
    state.positions = reverse_position_step(state.positions, out.velocities, dt);
    const double next = static_cast<double>(n - k - 1) / n;
    state.t = next;
    if (k + 1 == n) state.tokens = finalize_tokens(state.tokens, out.scores, vocab);
    if (cfg.trace) {
      result.trace->snapshots.push_back(snapshot(k + 1, next, state, vocab));
    }
  }
  result.renormalized = stats.renormalized;
  result.output = decode(state, vocab);
  result.final_state = std::move(state);
  return result;
}

std::vector<SampleResult> sample_many(const ParameterSet& params,
                                      const std::vector<TokenSequence>& prompts,
                                      const SampleConfig& cfg) {
  std::vector<SampleResult> out;
  out.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    Rng rng = make_rng(cfg.seed, {0x5a, i});
    out.push_back(sample(params, prompts[i], cfg, rng));
  }
  return out;
}

}  // namespace otinfill
