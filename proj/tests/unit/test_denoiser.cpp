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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "otinfill/checkpoint.hpp"
#include "otinfill/denoiser.hpp"
#include "otinfill/errors.hpp"

#include <unistd.h>

namespace otinfill {
namespace {

DenoiserConfig small_config() {
  DenoiserConfig c;
  c.vocab_size = 7;
  c.embed_dim = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.mlp_ratio = 2;
  c.context_length = 5;
  c.rotary_scale = 5.0;
  return c;
}

DiffusionState random_state(const DenoiserConfig& c, Rng& rng) {
  std::uniform_int_distribution<int> tok(0, c.vocab_size - 1);
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  DiffusionState s;
  s.t = 0.63;
  for (int i = 0; i < c.context_length; ++i) {
    s.tokens.push_back(tok(rng));
    s.positions.push_back(pos(rng));
    s.classes.push_back(static_cast<SlotClass>(i % 3));
  }
  return s;
}

// Scalar probe: a fixed random linear functional of both heads.
struct Probe {
  Matrix a;
  std::vector<double> b;
  double operator()(const DenoiserOutput& o) const {
    double v = (a.array() * o.log_scores.array()).sum();
    for (std::size_t i = 0; i < b.size(); ++i) v += b[i] * o.velocities[i];
    return v;
  }
};

TEST(Denoiser, ConfigValidation) {
  DenoiserConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), FormatError);
}

TEST(Denoiser, OutputShapesAndPositivity) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 1, 0.5);
  Rng rng(2);
  const auto out = forward(params, random_state(cfg, rng));
  EXPECT_EQ(out.scores.rows(), cfg.context_length);
  EXPECT_EQ(out.scores.cols(), cfg.vocab_size);
  EXPECT_EQ(out.velocities.size(), static_cast<std::size_t>(cfg.context_length));
  EXPECT_TRUE((out.scores.array() > 0.0).all());
  for (double v : out.velocities) EXPECT_TRUE(std::isfinite(v));
}

TEST(Denoiser, DeterministicBitwise) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 3, 0.3);
  Rng rng(4);
  const auto s = random_state(cfg, rng);
  const auto a = forward(params, s);
  const auto b = forward(params, s);
  EXPECT_TRUE(a.log_scores == b.log_scores);
  EXPECT_EQ(a.velocities, b.velocities);
}

TEST(Denoiser, RejectsBadInputs) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 3);
  Rng rng(4);
  auto s = random_state(cfg, rng);
  s.t = 0.0;
  EXPECT_THROW(forward(params, s), DomainError);
  s = random_state(cfg, rng);
  s.tokens.pop_back();
  EXPECT_THROW(forward(params, s), DomainError);
}

TEST(Denoiser, NonFiniteActivationNamesTheBlock) {
  const auto cfg = small_config();
  auto params = init_parameters(cfg, 3);
  params.blocks[1].w1(0, 0) = std::numeric_limits<double>::infinity();
  Rng rng(4);
  try {
    forward(params, random_state(cfg, rng));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("block 1"), std::string::npos)
        << e.what();
  }
}

TEST(Denoiser, PermutationEquivariance) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 5, 0.4);
  Rng rng(6);
  const auto s = random_state(cfg, rng);
  std::vector<int> perm{3, 0, 4, 1, 2};
  DiffusionState p = s;
  for (int i = 0; i < cfg.context_length; ++i) {
    p.tokens[i] = s.tokens[perm[i]];
    p.positions[i] = s.positions[perm[i]];
    p.classes[i] = s.classes[perm[i]];
  }
  const auto a = forward(params, s);
  const auto b = forward(params, p);
  for (int i = 0; i < cfg.context_length; ++i) {
    EXPECT_NEAR(b.velocities[i], a.velocities[perm[i]], 1e-12);
    for (int y = 0; y < cfg.vocab_size; ++y) {
      EXPECT_NEAR(b.log_scores(i, y), a.log_scores(perm[i], y), 1e-12);
    }
  }
}

TEST(Denoiser, ZeroUpstreamGivesZeroGradients) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 7, 0.3);
  Rng rng(8);
  ForwardCacheHandle cache;
  forward(params, random_state(cfg, rng), &cache);
  OutputGrad up{ScoreTable::Zero(cfg.context_length, cfg.vocab_size),
                std::vector<double>(cfg.context_length, 0.0)};
  auto grads = ParameterSet::zeros_like(params);
  backward(params, cache, up, grads);
  grads.visit([](const std::string& name, const Matrix& m) {
    EXPECT_TRUE((m.array() == 0.0).all()) << name;
  });
}

TEST(Denoiser, VelocityBiasGradientIsMeanResidual) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 9, 0.3);
  Rng rng(10);
  ForwardCacheHandle cache;
  const auto out = forward(params, random_state(cfg, rng), &cache);
  const std::vector<double> target{0.1, -0.3, 0.2, 0.0, 0.5};
  const double L = cfg.context_length;
  OutputGrad up{ScoreTable::Zero(cfg.context_length, cfg.vocab_size), {}};
  double want = 0.0;
  for (int i = 0; i < cfg.context_length; ++i) {
    const double r = out.velocities[i] - target[i];
    up.d_velocities.push_back(2.0 / L * r);
    want += 2.0 / L * r;
  }
  auto grads = ParameterSet::zeros_like(params);
  backward(params, cache, up, grads);
  EXPECT_NEAR(grads.vel_b(0, 0), want, 1e-12);
}

TEST(Denoiser, GradientMatchesFiniteDifference) {
  const auto cfg = small_config();
  auto params = init_parameters(cfg, 11, 0.35);
  Rng rng(12);
  const auto state = random_state(cfg, rng);
  std::normal_distribution<double> n01;
  Probe probe{Matrix(cfg.context_length, cfg.vocab_size), {}};
  for (int i = 0; i < probe.a.rows(); ++i)
    for (int j = 0; j < probe.a.cols(); ++j) probe.a(i, j) = n01(rng);
  for (int i = 0; i < cfg.context_length; ++i) probe.b.push_back(n01(rng));

  ForwardCacheHandle cache;
  forward(params, state, &cache);
  auto grads = ParameterSet::zeros_like(params);
  backward(params, cache, OutputGrad{probe.a, probe.b}, grads);

  std::vector<std::pair<Matrix*, Matrix*>> tensors;
  std::vector<std::string> names;
  params.visit([&](const std::string& name, Matrix& m) {
    tensors.push_back({&m, nullptr});
    names.push_back(name);
  });
  std::size_t k = 0;
  grads.visit([&](const std::string&, Matrix& m) { tensors[k++].second = &m; });

  // Every tensor gets at least a few coordinates; the rest are random.
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (int r = 0; r < 3; ++r) {
      coords.push_back({t, static_cast<Eigen::Index>(rng() % tensors[t].first->size())});
    }
  }
  while (coords.size() < 240) {
    const std::size_t t = rng() % tensors.size();
    coords.push_back({t, static_cast<Eigen::Index>(rng() % tensors[t].first->size())});
  }

  int checked = 0;
  for (const auto& [t, idx] : coords) {
    double& x = tensors[t].first->data()[idx];
    const double analytic = tensors[t].second->data()[idx];
    auto f = [&] { return probe(forward(params, state)); };
    const double numeric = oracles::central_difference(f, x, 1e-5);
    const double denom =
        std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    EXPECT_LT(std::fabs(analytic - numeric) / denom, 1e-4)
        << names[t] << "[" << idx << "] analytic=" << analytic
        << " numeric=" << numeric;
    ++checked;
  }
  EXPECT_GE(checked, 200);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 13, 0.2);
  const auto bytes = serialize_parameters(params);
  const auto back = deserialize_parameters(bytes);
  EXPECT_EQ(back.config, cfg);
  EXPECT_EQ(serialize_parameters(back), bytes);
  Rng rng(14);
  const auto s = random_state(cfg, rng);
  const auto a = forward(params, s);
  const auto b = forward(back, s);
  EXPECT_TRUE(a.log_scores == b.log_scores);
  EXPECT_EQ(a.velocities, b.velocities);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto cfg = small_config();
  auto bytes = serialize_parameters(init_parameters(cfg, 1));
  EXPECT_THROW(deserialize_parameters("not a checkpoint"), FormatError);
  EXPECT_THROW(deserialize_parameters(bytes.substr(0, bytes.size() - 3)),
               FormatError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto cfg = small_config();
  const auto params = init_parameters(cfg, 15);
  const auto path = std::filesystem::temp_directory_path() /
                    ("otinfill_ckpt_" + std::to_string(::getpid()) + ".bin");
  save_checkpoint(path, params);
  EXPECT_EQ(serialize_parameters(load_checkpoint(path)),
            serialize_parameters(params));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace otinfill
