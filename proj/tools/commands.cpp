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
#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "otinfill/checkpoint.hpp"
#include "otinfill/errors.hpp"
#include "otinfill/sampler.hpp"
#include "otinfill/text_io.hpp"
#include "otinfill/trainer.hpp"

namespace otinfill::cli {
namespace {

namespace fs = std::filesystem;

void check_sequences(const std::vector<TokenSequence>& seqs,
                     const Vocabulary& vocab, int L, const fs::path& source,
                     bool allow_empty) {
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto where = source.string() + ":" + std::to_string(i + 1);
    if (seqs[i].empty() && !allow_empty) {
      throw FormatError(where + ": empty sequence");
    }
    if (static_cast<int>(seqs[i].size()) > L) {
      throw FormatError(where + ": longer than context_length " +
                        std::to_string(L));
    }
    for (TokenId t : seqs[i]) {
      if (!vocab.is_ordinary(t)) {
        throw FormatError(where + ": token " + std::to_string(t) +
                          " is not an ordinary token of a size-" +
                          std::to_string(vocab.size) + " vocabulary");
      }
    }
  }
}

}  // namespace

std::vector<TrainingExample> training_examples(const RunConfig& cfg) {
  std::vector<TokenSequence> corpus;
  if (!cfg.paths.corpus.empty()) {
    if (!fs::exists(cfg.paths.corpus)) {
      throw FormatError("corpus file " + cfg.paths.corpus.string() +
                        " does not exist");
    }
    corpus = read_token_file(cfg.paths.corpus);
    check_sequences(corpus, cfg.model.vocab(), cfg.model.context_length,
                    cfg.paths.corpus, false);
    if (corpus.empty()) {
      throw FormatError("corpus file " + cfg.paths.corpus.string() +
                        " is empty");
    }
  } else {
    corpus = generate(cfg.corpus);
  }
  return make_examples(corpus, cfg.mask, cfg.corpus.seed);
}

EvalSet eval_set(const RunConfig& cfg) {
  CorpusSpec spec = cfg.corpus;
  spec.size = cfg.eval.size;
  spec.seed = cfg.eval.seed;
  EvalSet out;
  for (const auto& e : make_examples(generate(spec), cfg.mask, cfg.eval.seed)) {
    out.prompts.push_back(e.prompt_tokens());
    out.references.push_back(e.tokens);
  }
  return out;
}

TrainOutcome train(const RunConfig& cfg, const fs::path& out_dir,
                   std::ostream& log, OTCache* cache) {
  const auto examples = training_examples(cfg);

  ParameterSet params = init_parameters(cfg.model, cfg.train.seed);
  AdamWState state = AdamWState::for_parameters(params);

  std::string metrics = metrics_header() + "\n";
  std::string timing = "step\twall_ms\n";
  const int every = std::max(1, cfg.train.steps / 20);
  const auto start = std::chrono::steady_clock::now();

  TrainCallbacks callbacks;
  callbacks.on_step = [&](const TrainStepReport& r) {
    metrics += format_metrics(r) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d\t%.3f\n", r.step, r.wall_ms);
    timing += buf;
    if ((r.step + 1) % every == 0 || r.step + 1 == cfg.train.steps) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      char line[160];
      std::snprintf(line, sizeof line,
                    "step %d/%d  token %.4f  position %.4f  total %.4f  (%.1fs)",
                    r.step + 1, cfg.train.steps, r.token_loss, r.position_loss,
                    r.total_loss, secs);
      log << line << "\n";
    }
  };
  callbacks.checkpoint_every = cfg.checkpoint_every;
  callbacks.on_checkpoint = [&](int step, const ParameterSet& p) {
    save_checkpoint(out_dir / ("model-step" + std::to_string(step + 1) + ".ckpt"),
                    p);
  };

  run_training(params, state, examples, cfg.train, callbacks, cache);

  TrainOutcome out;
  const std::string bytes = serialize_parameters(params);
  out.checkpoint = out_dir / "model.ckpt";
  out.metrics = out_dir / "metrics.tsv";
  out.checkpoint_hash = hex64(fnv1a64(bytes));
  write_file_atomic(out.metrics, metrics);
  write_file_atomic(out_dir / "timing.tsv", timing);
  write_file_atomic(out_dir / "config.ini", to_text(cfg));
  write_file_atomic(out.checkpoint, bytes);
  out.params = std::move(params);
  return out;
}

fs::path sweep_path(const fs::path& output, int steps, bool sweep) {
  if (!sweep) return output;
  fs::path p = output;
  p.replace_filename(output.stem().string() + ".steps" + std::to_string(steps) +
                     output.extension().string());
  return p;
}

void sample(const SampleOptions& opts, std::ostream& log) {
  const ParameterSet params = load_checkpoint(opts.checkpoint);
  if (opts.config && !(opts.config->model == params.config)) {
    throw FormatError("checkpoint " + opts.checkpoint.string() +
                      " was trained with a different [model] section");
  }
  const DenoiserConfig& model = params.config;
  const auto prompts = read_token_file(opts.prompts);
  check_sequences(prompts, model.vocab(), model.context_length, opts.prompts,
                  true);

  SampleConfig base = opts.config ? opts.config->sample : SampleConfig{};
  if (opts.zT_mode) base.zT_mode = *opts.zT_mode;
  if (opts.anneal) base.anneal = *opts.anneal;
  if (opts.seed) base.seed = *opts.seed;
  base.trace = !opts.trace_dir.empty();
  std::vector<int> steps = opts.steps;
  if (steps.empty()) steps.push_back(base.num_steps);
  const bool sweep = steps.size() > 1;

  for (int n : steps) {
    SampleConfig cfg = base;
    cfg.num_steps = n;
    const auto results = sample_many(params, prompts, cfg);
    std::vector<TokenSequence> outputs;
    int renormalized = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      outputs.push_back(results[i].output);
      renormalized += results[i].renormalized;
      if (results[i].trace) {
        const std::string name = "trace_" + std::to_string(i) +
                                 (sweep ? ".steps" + std::to_string(n) : "") +
                                 ".tsv";
        write_file_atomic(opts.trace_dir / name, results[i].trace->to_tsv());
      }
    }
    const fs::path out = sweep_path(opts.output, n, sweep);
    write_token_file(out, outputs);
    log << "wrote " << outputs.size() << " samples (N=" << n << ") to "
        << out.string();
    if (renormalized > 0) log << "; " << renormalized << " renormalized leaps";
    log << "\n";
  }
}

EvalReport eval(const fs::path& generated, const fs::path& references,
                const fs::path& prompts) {
  const auto gen = read_token_file(generated);
  const auto ref = read_token_file(references);
  if (gen.size() != ref.size()) {
    throw FormatError("line count mismatch: " + generated.string() + " has " +
                      std::to_string(gen.size()) + ", " + references.string() +
                      " has " + std::to_string(ref.size()));
  }
  std::vector<TokenSequence> pr;
  if (!prompts.empty()) {
    pr = read_token_file(prompts);
    // An empty prompt file means every sample is unconstrained.
    if (!pr.empty() && pr.size() != gen.size()) {
      throw FormatError("line count mismatch: " + generated.string() + " has " +
                        std::to_string(gen.size()) + ", " + prompts.string() +
                        " has " + std::to_string(pr.size()));
    }
  }
  return evaluate(gen, ref, pr);
}

std::string ablate(const RunConfig& cfg, std::ostream& log) {
  const auto set = eval_set(cfg);
  const std::vector<bool> ots =
      cfg.ablate.ot.empty() ? std::vector<bool>{cfg.train.ot_enabled}
                            : cfg.ablate.ot;
  const std::vector<LimitMode> modes =
      cfg.ablate.zT_mode.empty() ? std::vector<LimitMode>{cfg.sample.zT_mode}
                                 : cfg.ablate.zT_mode;
  const std::vector<double> lambdas =
      cfg.ablate.lambda.empty() ? std::vector<double>{cfg.train.lambda}
                                : cfg.ablate.lambda;
  const std::vector<int> steps = cfg.ablate.sample_steps.empty()
                                     ? std::vector<int>{cfg.sample.num_steps}
                                     : cfg.ablate.sample_steps;

  std::string table = "variant\tot\tzT_mode\tlambda\tsample_steps\t" +
                      EvalReport::record_header() + "\n";
  int variant = 0;
  for (bool ot : ots) {
    for (LimitMode mode : modes) {
      for (double lambda : lambdas) {
        RunConfig v = cfg;
        v.train.ot_enabled = ot;
        v.train.zT_mode = mode;
        v.sample.zT_mode = mode;
        v.train.lambda = lambda;
        std::ostringstream name;
        name << "v" << variant << "_ot" << (ot ? "on" : "off") << "_"
             << to_string(mode) << "_lambda" << lambda;
        log << "== variant " << name.str() << "\n";
        const auto trained =
            train(v, cfg.paths.output_dir / "ablate" / name.str(), log);
        for (int n : steps) {
          SampleConfig sc = v.sample;
          sc.num_steps = n;
          std::vector<TokenSequence> outputs;
          for (auto& r : sample_many(trained.params, set.prompts, sc)) {
            outputs.push_back(std::move(r.output));
          }
          const auto report = evaluate(outputs, set.references, set.prompts);
          char head[128];
          std::snprintf(head, sizeof head, "%d\t%s\t%s\t%g\t%d\t", variant,
                        ot ? "on" : "off", to_string(mode).c_str(), lambda, n);
          table += head + report.to_record() + "\n";
        }
        ++variant;
      }
    }
  }
  return table;
}

void precompute_ot(const RunConfig& cfg, int steps, const fs::path& output,
                   std::ostream& log) {
  const auto examples = training_examples(cfg);
  std::vector<OTCacheEntry> all;
  for (int step = 0; step < steps; ++step) {
    std::vector<TrainingExample> batch;
    for (std::size_t i : batch_indices(examples.size(), cfg.train, step)) {
      batch.push_back(examples[i]);
    }
    auto entries = otinfill::precompute_ot(
        batch, cfg.model.context_length, cfg.train.zT_mode, cfg.train.seed,
        static_cast<std::uint64_t>(step) * cfg.train.batch_size,
        cfg.train.num_threads);
    for (auto& e : entries) all.push_back(std::move(e));
  }
  write_file_atomic(output, serialize_ot_cache(all));
  log << "wrote " << all.size() << " couplings to " << output.string() << "\n";
}

}  // namespace otinfill::cli
