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
#ifndef OTINFILL_RUN_CONFIG_HPP_
#define OTINFILL_RUN_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "otinfill/corpus.hpp"
#include "otinfill/denoiser.hpp"
#include "otinfill/sampler.hpp"
#include "otinfill/trainer.hpp"

// Run configuration file: INI syntax, format version 1.
//
//   version = 1
//
//   [model]   vocab_size embed_dim num_layers num_heads mlp_ratio
//             context_length rotary_scale noise_epsilon
//   [corpus]  kind (sorted-integers | grammar) min_length max_length size
//             seed
//   [mask]    mode (random_keywords | block) min_keywords max_keywords
//             min_block max_block
//   [train]   lambda batch_size lr beta1 beta2 weight_decay steps seed
//             zT_mode (random | uniform) ot (true | false) grad_clip
//             token_weight (constant | inverse_ratio) threads prefetch
//             checkpoint_every
//   [sample]  steps zT_mode anneal trace seed
//   [eval]    size seed             held-out examples generated for eval
//   [ablate]  ot zT_mode lambda steps   comma-separated variant axes
//   [paths]   output_dir corpus checkpoint
//
// Every key is optional; unknown sections or keys are errors. Relative paths
// resolve against the config file's directory. When [paths] output_dir is
// absent, $OTINFILL_OUTPUT_DIR is used, then "./otinfill-out".
namespace otinfill {

struct EvalSetConfig {
  int size = 200;
  std::uint64_t seed = 1;
};

struct AblateConfig {
  std::vector<bool> ot{true, false};
  std::vector<LimitMode> zT_mode;   // empty: use [sample] zT_mode
  std::vector<double> lambda;       // empty: use [train] lambda
  std::vector<int> sample_steps;    // empty: use [sample] steps
};

struct PathsConfig {
  std::filesystem::path output_dir;
  std::filesystem::path corpus;  // optional pre-existing corpus file
  std::filesystem::path checkpoint;
};

struct RunConfig {
  DenoiserConfig model;
  CorpusSpec corpus;
  MaskSpec mask;
  TrainConfig train;
  SampleConfig sample;
  EvalSetConfig eval;
  AblateConfig ablate;
  PathsConfig paths;
  int checkpoint_every = 0;

  void validate() const;
};

// Throws FormatError with the line number (syntax) or section.key (values).
RunConfig parse_run_config(const std::string& text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical text form; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

std::string to_string(LimitMode m);
LimitMode limit_mode_from_string(const std::string& s);

}  // namespace otinfill

#endif  // OTINFILL_RUN_CONFIG_HPP_
