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
#include "otinfill/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "otinfill/errors.hpp"
#include "otinfill/text_io.hpp"

namespace otinfill {
namespace {

namespace pt = boost::property_tree;

constexpr int kConfigVersion = 1;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"model",
       {"vocab_size", "embed_dim", "num_layers", "num_heads", "mlp_ratio",
        "context_length", "rotary_scale", "noise_epsilon"}},
      {"corpus", {"kind", "min_length", "max_length", "size", "seed"}},
      {"mask",
       {"mode", "min_keywords", "max_keywords", "min_block", "max_block"}},
      {"train",
       {"lambda", "batch_size", "lr", "beta1", "beta2", "weight_decay", "steps",
        "seed", "zT_mode", "ot", "grad_clip", "token_weight", "threads",
        "prefetch", "checkpoint_every"}},
      {"sample", {"steps", "zT_mode", "anneal", "trace", "seed"}},
      {"eval", {"size", "seed"}},
      {"ablate", {"ot", "zT_mode", "lambda", "steps"}},
      {"paths", {"output_dir", "corpus", "checkpoint"}},
  };
  return k;
}

class Fields {
 public:
  explicit Fields(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const std::string& section, const std::string& key, T& out) const {
    const auto node = tree_.get_child_optional(pt::ptree::path_type(
        section + "." + key, '.'));
    if (!node) return;
    try {
      out = node->get_value<T>();
    } catch (const pt::ptree_error&) {
      throw FormatError("config: bad value '" + node->data() + "' for " +
                        section + "." + key);
    }
  }

  std::optional<std::string> raw(const std::string& section,
                                 const std::string& key) const {
    const auto node = tree_.get_child_optional(pt::ptree::path_type(
        section + "." + key, '.'));
    if (!node) return std::nullopt;
    return node->data();
  }

 private:
  const pt::ptree& tree_;
};

bool parse_bool(const std::string& v, const std::string& field) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw FormatError("config: bad boolean '" + v + "' for " + field);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(v);
  while (std::getline(ss, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

std::string to_string(LimitMode m) {
  return m == LimitMode::kRandom ? "random" : "uniform";
}

LimitMode limit_mode_from_string(const std::string& s) {
  if (s == "random") return LimitMode::kRandom;
  if (s == "uniform") return LimitMode::kUniform;
  throw FormatError("config: zT_mode must be 'random' or 'uniform', got '" + s +
                    "'");
}

void RunConfig::validate() const {
  model.validate();
  corpus.validate(model.context_length);
  train.validate();
  if (sample.num_steps < 1) throw FormatError("config: sample.steps must be >= 1");
  if (eval.size < 1) throw FormatError("config: eval.size must be >= 1");
  if (corpus.vocab_size != model.vocab_size) {
    throw FormatError("config: corpus and model vocabularies differ");
  }
}

RunConfig parse_run_config(const std::string& text,
                           const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("config: line " + std::to_string(e.line()) + ": " +
                      e.message());
  }

  for (const auto& [name, node] : tree) {
    if (name == "version" && node.empty()) continue;
    const auto it = known_keys().find(name);
    if (it == known_keys().end()) {
      throw FormatError("config: unknown section or key '" + name + "'");
    }
    for (const auto& [key, value] : node) {
      if (!it->second.contains(key)) {
        throw FormatError("config: unknown key " + name + "." + key);
      }
    }
  }
  int version = kConfigVersion;
  if (auto v = tree.get_optional<std::string>("version")) {
    try {
      version = std::stoi(*v);
    } catch (const std::exception&) {
      throw FormatError("config: bad version '" + *v + "'");
    }
  }
  if (version != kConfigVersion) {
    throw FormatError("config: unsupported version " + std::to_string(version));
  }

  RunConfig c;
  const Fields f(tree);
  f.get("model", "vocab_size", c.model.vocab_size);
  f.get("model", "embed_dim", c.model.embed_dim);
  f.get("model", "num_layers", c.model.num_layers);
  f.get("model", "num_heads", c.model.num_heads);
  f.get("model", "mlp_ratio", c.model.mlp_ratio);
  f.get("model", "context_length", c.model.context_length);
  c.model.rotary_scale = c.model.context_length;
  f.get("model", "rotary_scale", c.model.rotary_scale);
  f.get("model", "noise_epsilon", c.model.noise_epsilon);

  c.corpus.vocab_size = c.model.vocab_size;
  if (auto k = f.raw("corpus", "kind")) {
    if (*k == "sorted-integers") c.corpus.kind = CorpusKind::kSortedIntegers;
    else if (*k == "grammar") c.corpus.kind = CorpusKind::kGrammar;
    else throw FormatError("config: bad value '" + *k + "' for corpus.kind");
  }
  f.get("corpus", "min_length", c.corpus.min_length);
  f.get("corpus", "max_length", c.corpus.max_length);
  f.get("corpus", "size", c.corpus.size);
  f.get("corpus", "seed", c.corpus.seed);

  c.mask.max_block = c.model.context_length / 2;
  if (auto m = f.raw("mask", "mode")) {
    if (*m == "random_keywords") c.mask.mode = MaskMode::kRandomKeywords;
    else if (*m == "block") c.mask.mode = MaskMode::kBlock;
    else throw FormatError("config: bad value '" + *m + "' for mask.mode");
  }
  f.get("mask", "min_keywords", c.mask.min_keywords);
  f.get("mask", "max_keywords", c.mask.max_keywords);
  f.get("mask", "min_block", c.mask.min_block);
  f.get("mask", "max_block", c.mask.max_block);

  f.get("train", "lambda", c.train.lambda);
  f.get("train", "batch_size", c.train.batch_size);
  f.get("train", "lr", c.train.adam.lr);
  f.get("train", "beta1", c.train.adam.beta1);
  f.get("train", "beta2", c.train.adam.beta2);
  f.get("train", "weight_decay", c.train.adam.weight_decay);
  f.get("train", "steps", c.train.steps);
  f.get("train", "seed", c.train.seed);
  if (auto v = f.raw("train", "zT_mode")) c.train.zT_mode = limit_mode_from_string(*v);
  if (auto v = f.raw("train", "ot")) c.train.ot_enabled = parse_bool(*v, "train.ot");
  f.get("train", "grad_clip", c.train.grad_clip);
  if (auto v = f.raw("train", "token_weight")) {
    if (*v == "constant") c.train.token_weight = TokenLossWeight::kConstant;
    else if (*v == "inverse_ratio") c.train.token_weight = TokenLossWeight::kInverseRatio;
    else throw FormatError("config: bad value '" + *v + "' for train.token_weight");
  }
  f.get("train", "threads", c.train.num_threads);
  f.get("train", "prefetch", c.train.prefetch_depth);
  f.get("train", "checkpoint_every", c.checkpoint_every);

  f.get("sample", "steps", c.sample.num_steps);
  if (auto v = f.raw("sample", "zT_mode")) c.sample.zT_mode = limit_mode_from_string(*v);
  if (auto v = f.raw("sample", "anneal")) c.sample.anneal = parse_bool(*v, "sample.anneal");
  if (auto v = f.raw("sample", "trace")) c.sample.trace = parse_bool(*v, "sample.trace");
  f.get("sample", "seed", c.sample.seed);

  f.get("eval", "size", c.eval.size);
  f.get("eval", "seed", c.eval.seed);

  if (auto v = f.raw("ablate", "ot")) {
    c.ablate.ot.clear();
    for (const auto& s : split_list(*v)) c.ablate.ot.push_back(parse_bool(s, "ablate.ot"));
  }
  if (auto v = f.raw("ablate", "zT_mode")) {
    for (const auto& s : split_list(*v)) c.ablate.zT_mode.push_back(limit_mode_from_string(s));
  }
  if (auto v = f.raw("ablate", "lambda")) {
    for (const auto& s : split_list(*v)) {
      try {
        c.ablate.lambda.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw FormatError("config: bad value '" + s + "' for ablate.lambda");
      }
    }
  }
  if (auto v = f.raw("ablate", "steps")) {
    for (const auto& s : split_list(*v)) {
      try {
        c.ablate.sample_steps.push_back(std::stoi(s));
      } catch (const std::exception&) {
        throw FormatError("config: bad value '" + s + "' for ablate.steps");
      }
    }
  }

  if (auto v = f.raw("paths", "output_dir")) {
    c.paths.output_dir = resolve(base_dir, *v);
  } else if (const char* env = std::getenv("OTINFILL_OUTPUT_DIR")) {
    c.paths.output_dir = env;
  } else {
    c.paths.output_dir = "otinfill-out";
  }
  if (auto v = f.raw("paths", "corpus")) c.paths.corpus = resolve(base_dir, *v);
  if (auto v = f.raw("paths", "checkpoint")) c.paths.checkpoint = resolve(base_dir, *v);

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream o;
  o << "version = " << kConfigVersion << "\n\n[model]\n"
    << "vocab_size = " << c.model.vocab_size << "\n"
    << "embed_dim = " << c.model.embed_dim << "\n"
    << "num_layers = " << c.model.num_layers << "\n"
    << "num_heads = " << c.model.num_heads << "\n"
    << "mlp_ratio = " << c.model.mlp_ratio << "\n"
    << "context_length = " << c.model.context_length << "\n"
    << "rotary_scale = " << fmt_double(c.model.rotary_scale) << "\n"
    << "noise_epsilon = " << fmt_double(c.model.noise_epsilon) << "\n\n[corpus]\n"
    << "kind = "
    << (c.corpus.kind == CorpusKind::kGrammar ? "grammar" : "sorted-integers")
    << "\n"
    << "min_length = " << c.corpus.min_length << "\n"
    << "max_length = " << c.corpus.max_length << "\n"
    << "size = " << c.corpus.size << "\n"
    << "seed = " << c.corpus.seed << "\n\n[mask]\n"
    << "mode = "
    << (c.mask.mode == MaskMode::kBlock ? "block" : "random_keywords") << "\n"
    << "min_keywords = " << c.mask.min_keywords << "\n"
    << "max_keywords = " << c.mask.max_keywords << "\n"
    << "min_block = " << c.mask.min_block << "\n"
    << "max_block = " << c.mask.max_block << "\n\n[train]\n"
    << "lambda = " << fmt_double(c.train.lambda) << "\n"
    << "batch_size = " << c.train.batch_size << "\n"
    << "lr = " << fmt_double(c.train.adam.lr) << "\n"
    << "beta1 = " << fmt_double(c.train.adam.beta1) << "\n"
    << "beta2 = " << fmt_double(c.train.adam.beta2) << "\n"
    << "weight_decay = " << fmt_double(c.train.adam.weight_decay) << "\n"
    << "steps = " << c.train.steps << "\n"
    << "seed = " << c.train.seed << "\n"
    << "zT_mode = " << to_string(c.train.zT_mode) << "\n"
    << "ot = " << (c.train.ot_enabled ? "true" : "false") << "\n"
    << "grad_clip = " << fmt_double(c.train.grad_clip) << "\n"
    << "token_weight = "
    << (c.train.token_weight == TokenLossWeight::kConstant ? "constant"
                                                           : "inverse_ratio")
    << "\n"
    << "threads = " << c.train.num_threads << "\n"
    << "prefetch = " << c.train.prefetch_depth << "\n"
    << "checkpoint_every = " << c.checkpoint_every << "\n\n[sample]\n"
    << "steps = " << c.sample.num_steps << "\n"
    << "zT_mode = " << to_string(c.sample.zT_mode) << "\n"
    << "anneal = " << (c.sample.anneal ? "true" : "false") << "\n"
    << "trace = " << (c.sample.trace ? "true" : "false") << "\n"
    << "seed = " << c.sample.seed << "\n\n[eval]\n"
    << "size = " << c.eval.size << "\n"
    << "seed = " << c.eval.seed << "\n\n[ablate]\n";
  auto join = [&o](const auto& items, auto&& fmt) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) o << ", ";
      o << fmt(items[i]);
    }
    o << "\n";
  };
  o << "ot = ";
  join(c.ablate.ot, [](bool b) { return b ? "true" : "false"; });
  if (!c.ablate.zT_mode.empty()) {
    o << "zT_mode = ";
    join(c.ablate.zT_mode, [](LimitMode m) { return to_string(m); });
  }
  if (!c.ablate.lambda.empty()) {
    o << "lambda = ";
    join(c.ablate.lambda, [](double v) { return fmt_double(v); });
  }
  if (!c.ablate.sample_steps.empty()) {
    o << "steps = ";
    join(c.ablate.sample_steps, [](int v) { return v; });
  }
  o << "\n[paths]\n"
    << "output_dir = " << c.paths.output_dir.string() << "\n";
  if (!c.paths.corpus.empty()) o << "corpus = " << c.paths.corpus.string() << "\n";
  if (!c.paths.checkpoint.empty()) {
    o << "checkpoint = " << c.paths.checkpoint.string() << "\n";
  }
  return o.str();
}

}  // namespace otinfill
