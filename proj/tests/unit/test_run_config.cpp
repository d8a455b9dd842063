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
#include <gtest/gtest.h>

#include <cstdlib>
#include <string>

#include "otinfill/errors.hpp"
#include "otinfill/run_config.hpp"

namespace otinfill {
namespace {

const char* kMinimal = R"(version = 1

[model]
vocab_size = 32
embed_dim = 32
num_layers = 2
num_heads = 2
context_length = 24

[corpus]
kind = sorted-integers
max_length = 12

[train]
steps = 10
lambda = 300
ot = off

[ablate]
ot = on, off
lambda = 3, 10, 30
steps = 2, 64
)";

std::string expect_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

TEST(RunConfig, ParsesAndDerivesDefaults) {
  const auto c = parse_run_config(kMinimal, "/base");
  EXPECT_EQ(c.model.embed_dim, 32);
  EXPECT_EQ(c.model.rotary_scale, 24.0);
  EXPECT_EQ(c.mask.max_block, 12);
  EXPECT_EQ(c.corpus.vocab_size, 32);
  EXPECT_EQ(c.train.lambda, 300.0);
  EXPECT_FALSE(c.train.ot_enabled);
  EXPECT_EQ(c.train.adam.lr, 3e-4);
  EXPECT_EQ(c.ablate.ot, (std::vector<bool>{true, false}));
  EXPECT_EQ(c.ablate.lambda, (std::vector<double>{3, 10, 30}));
  EXPECT_EQ(c.ablate.sample_steps, (std::vector<int>{2, 64}));
}

TEST(RunConfig, TextRoundTrip) {
  const auto c = parse_run_config(kMinimal);
  const auto text = to_text(c);
  const auto back = parse_run_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.ablate.lambda, c.ablate.lambda);
}

TEST(RunConfig, ReportsUnknownKeys) {
  const auto e = expect_error("[train]\nsteps = 5\nlearning_rate = 1\n");
  EXPECT_NE(e.find("train.learning_rate"), std::string::npos) << e;
  const auto s = expect_error("[bogus]\nx = 1\n");
  EXPECT_NE(s.find("bogus"), std::string::npos) << s;
}

TEST(RunConfig, ReportsBadValuesByField) {
  const auto e = expect_error("[model]\nembed_dim = lots\n");
  EXPECT_NE(e.find("model.embed_dim"), std::string::npos) << e;
  const auto b = expect_error("[train]\not = maybe\n");
  EXPECT_NE(b.find("train.ot"), std::string::npos) << b;
  const auto m = expect_error("[sample]\nzT_mode = gaussian\n");
  EXPECT_NE(m.find("zT_mode"), std::string::npos) << m;
}

TEST(RunConfig, ReportsSyntaxErrorsByLine) {
  const auto e = expect_error("[model]\nvocab_size = 32\nthis line is junk\n");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
}

TEST(RunConfig, RejectsWrongVersion) {
  const auto e = expect_error("version = 2\n");
  EXPECT_NE(e.find("version"), std::string::npos) << e;
}

TEST(RunConfig, ValidatesCrossFieldConstraints) {
  expect_error("[model]\ncontext_length = 8\n[corpus]\nmax_length = 16\n");
  expect_error("[model]\nembed_dim = 30\nnum_heads = 4\n");
  expect_error("[train]\nlr = 0\n");
}

TEST(RunConfig, RelativePathsResolveAgainstConfigDirectory) {
  const auto c = parse_run_config(
      "[paths]\noutput_dir = out\ncorpus = data/c.txt\ncheckpoint = /abs/m.ckpt\n",
      "/cfg");
  EXPECT_EQ(c.paths.output_dir, std::filesystem::path("/cfg/out"));
  EXPECT_EQ(c.paths.corpus, std::filesystem::path("/cfg/data/c.txt"));
  EXPECT_EQ(c.paths.checkpoint, std::filesystem::path("/abs/m.ckpt"));
}

TEST(RunConfig, OutputDirFallsBackToEnvironment) {
  ::setenv("OTINFILL_OUTPUT_DIR", "/tmp/otinfill-env-out", 1);
  EXPECT_EQ(parse_run_config("").paths.output_dir,
            std::filesystem::path("/tmp/otinfill-env-out"));
  ::unsetenv("OTINFILL_OUTPUT_DIR");
  EXPECT_EQ(parse_run_config("").paths.output_dir,
            std::filesystem::path("otinfill-out"));
}

}  // namespace
}  // namespace otinfill
