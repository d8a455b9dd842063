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
#ifndef OTINFILL_TOOLS_COMMANDS_HPP_
#define OTINFILL_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otinfill/corpus.hpp"
#include "otinfill/evaluation.hpp"
#include "otinfill/ot_cache.hpp"
#include "otinfill/run_config.hpp"

// Subcommand bodies shared by the otinfill executable and the acceptance
// suite. Every file is written with write_file_atomic.
namespace otinfill::cli {

// Training examples for a run: the corpus file named in [paths] if any,
// otherwise the generated corpus, masked with [mask].
std::vector<TrainingExample> training_examples(const RunConfig& cfg);

// Held-out prompts and references built from [eval].
struct EvalSet {
  std::vector<TokenSequence> prompts;
  std::vector<TokenSequence> references;
};
EvalSet eval_set(const RunConfig& cfg);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::string checkpoint_hash;  // fnv1a64 of the checkpoint bytes, hex
  std::filesystem::path metrics;
  ParameterSet params;
};

// Writes metrics.tsv, timing.tsv, config.ini and model.ckpt (plus periodic
// model-step<k>.ckpt) under out_dir. Nothing is written if the corpus cannot
// be loaded.
TrainOutcome train(const RunConfig& cfg, const std::filesystem::path& out_dir,
                   std::ostream& log, OTCache* cache = nullptr);

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path prompts;
  std::filesystem::path output;
  std::vector<int> steps;  // one output file per value
  std::optional<LimitMode> zT_mode;
  std::optional<bool> anneal;
  std::optional<std::uint64_t> seed;
  std::filesystem::path trace_dir;  // empty: no traces
  std::optional<RunConfig> config;  // checked against the checkpoint
};

// Output path for one value of a --steps sweep.
std::filesystem::path sweep_path(const std::filesystem::path& output, int steps,
                                 bool sweep);

void sample(const SampleOptions& opts, std::ostream& log);

EvalReport eval(const std::filesystem::path& generated,
                const std::filesystem::path& references,
                const std::filesystem::path& prompts);

// One row per (ot, zT_mode, lambda, sample steps) variant.
std::string ablate(const RunConfig& cfg, std::ostream& log);

void precompute_ot(const RunConfig& cfg, int steps,
                   const std::filesystem::path& output, std::ostream& log);

}  // namespace otinfill::cli

#endif  // OTINFILL_TOOLS_COMMANDS_HPP_
