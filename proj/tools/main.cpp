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
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "otinfill/errors.hpp"
#include "otinfill/text_io.hpp"

namespace fs = std::filesystem;
using namespace otinfill;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;

RunConfig load(const fs::path& path, const std::string& output_override) {
  RunConfig c = load_run_config(path);
  if (!output_override.empty()) c.paths.output_dir = output_override;
  return c;
}

std::vector<int> parse_steps(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw FormatError("--steps: expected positive integers, got '" + item +
                        "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-aware discrete diffusion for text infilling"};
  app.require_subcommand(1);

  std::string config_path, output_dir, ot_cache;
  auto* train = app.add_subcommand("train", "Train a denoiser from a config");
  train->add_option("-c,--config", config_path, "Run config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("-o,--output-dir", output_dir,
                    "Overrides [paths] output_dir");
  train->add_option("--ot-cache", ot_cache,
                    "OT cache written by precompute-ot");

  std::string checkpoint, prompts, output, steps_text, zT_mode, trace_dir;
  std::uint64_t seed = 0;
  bool anneal = false;
  auto* sample = app.add_subcommand("sample", "Infill prompts with a checkpoint");
  sample->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  sample->add_option("--prompts", prompts, "One prompt per line")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("-o,--output", output)->required();
  sample->add_option("--steps", steps_text,
                     "Sampling steps; a comma list writes one file per value");
  sample->add_option("--zT-mode", zT_mode)->check(CLI::IsMember({"random", "uniform"}));
  sample->add_flag("--anneal", anneal, "Greedy unmasking");
  sample->add_option("--seed", seed);
  sample->add_option("--trace", trace_dir, "Directory for PathTrace files");
  sample->add_option("-c,--config", config_path,
                     "Run config; supplies [sample] defaults and is checked "
                     "against the checkpoint")
      ->check(CLI::ExistingFile);

  auto* trace = app.add_subcommand("trace-paths",
                                   "Sample with per-step position traces");
  trace->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  trace->add_option("--prompts", prompts)->required()->check(CLI::ExistingFile);
  trace->add_option("-o,--output-dir", output_dir)->required();
  trace->add_option("--steps", steps_text);
  trace->add_option("--zT-mode", zT_mode)->check(CLI::IsMember({"random", "uniform"}));
  trace->add_option("--seed", seed);

  std::string generated, references, report_path;
  auto* eval = app.add_subcommand("eval", "Score generations against references");
  eval->add_option("--generated", generated)->required()->check(CLI::ExistingFile);
  eval->add_option("--references", references)->required()->check(CLI::ExistingFile);
  eval->add_option("--prompts", prompts)->check(CLI::ExistingFile);
  eval->add_option("-o,--output", report_path, "Write the record line here");

  auto* ablate = app.add_subcommand("ablate", "Train and compare config variants");
  ablate->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  ablate->add_option("-o,--output-dir", output_dir);

  int ot_steps = -1;
  auto* pre = app.add_subcommand("precompute-ot",
                                 "Write the OT couplings of upcoming steps");
  pre->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  pre->add_option("-o,--output", output)->required();
  pre->add_option("--steps", ot_steps, "Steps to cover (default: [train] steps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*train) {
      const RunConfig cfg = load(config_path, output_dir);
      OTCache cache;
      OTCache* cache_ptr = nullptr;
      if (!ot_cache.empty()) {
        cache.insert(deserialize_ot_cache(read_file(ot_cache)));
        cache_ptr = &cache;
      }
      const auto out = cli::train(cfg, cfg.paths.output_dir, std::cerr, cache_ptr);
      if (cache_ptr != nullptr) {
        std::cerr << "ot cache: " << cache.hits() << " hits, " << cache.misses()
                  << " misses\n";
      }
      std::cout << "checkpoint " << out.checkpoint.string() << "\n"
                << "fnv1a64 " << out.checkpoint_hash << "\n";
    } else if (*sample || *trace) {
      cli::SampleOptions o;
      o.checkpoint = checkpoint;
      o.prompts = prompts;
      if (!steps_text.empty()) o.steps = parse_steps(steps_text);
      if (!zT_mode.empty()) o.zT_mode = limit_mode_from_string(zT_mode);
      if ((*sample ? sample : trace)->count("--seed") > 0) o.seed = seed;
      if (*sample) {
        o.output = output;
        if (anneal) o.anneal = true;
        o.trace_dir = trace_dir;
        if (!config_path.empty()) o.config = load_run_config(config_path);
      } else {
        o.output = fs::path(output_dir) / "samples.txt";
        o.trace_dir = output_dir;
      }
      cli::sample(o, std::cerr);
    } else if (*eval) {
      const auto report = cli::eval(generated, references, prompts);
      std::cout << report.to_table();
      if (!report_path.empty()) {
        write_file_atomic(report_path, EvalReport::record_header() + "\n" +
                                           report.to_record() + "\n");
      }
    } else if (*ablate) {
      const RunConfig cfg = load(config_path, output_dir);
      const std::string table = cli::ablate(cfg, std::cerr);
      write_file_atomic(cfg.paths.output_dir / "ablation.tsv", table);
      std::cout << table;
    } else if (*pre) {
      const RunConfig cfg = load(config_path, "");
      cli::precompute_ot(cfg, ot_steps < 0 ? cfg.train.steps : ot_steps, output,
                         std::cerr);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
