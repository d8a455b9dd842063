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
#ifndef OTINFILL_POSITION_DIFFUSION_HPP_
#define OTINFILL_POSITION_DIFFUSION_HPP_

#include <span>
#include <vector>

#include "otinfill/random.hpp"
#include "otinfill/types.hpp"

// Continuous token positions on [-1, 1], moved along straight lines between
// the limiting draw zT (t = 1) and the ground truth z0 (t = 0).
namespace otinfill {

enum class LimitMode { kRandom, kUniform };

// n evenly spaced values from lo to hi inclusive. n == 1 yields {lo}.
std::vector<double> linspace(double lo, double hi, int n);

// Ground-truth positions of a length-l sequence in a context of L slots:
// linspace(-l/L, l/L, l), with a single token placed at 0.
std::vector<double> build_z0(int l, int L);

// L i.i.d. U(-1, 1) positions; a uniformly random subset of l_p slots is
// classed Prompt.
PositionVector sample_zT_random(int L, int l_p, Rng& rng);

// Slots [0, l_p) are Prompt at linspace(-1, 1, l_p); slots [l_p, L) are
// Response at linspace(-1, 1, L - l_p).
PositionVector sample_zT_uniform(int L, int l_p);

// (1 - t) z0 + t zT, elementwise.
std::vector<double> interpolate(std::span<const double> z0_padded,
                                std::span<const double> zT, double t);

// Mean over slots of (v - (z0 - zT))^2.
double position_loss(std::span<const double> v_pred,
                     std::span<const double> z0_padded,
                     std::span<const double> zT);

// Gradient of position_loss with respect to v_pred.
std::vector<double> position_loss_grad(std::span<const double> v_pred,
                                       std::span<const double> z0_padded,
                                       std::span<const double> zT);

// Euler step from t to t - dt: z + dt * v, clamped to [-1, 1].
std::vector<double> reverse_position_step(std::span<const double> z_t,
                                          std::span<const double> v_pred,
                                          double dt);

}  // namespace otinfill

#endif  // OTINFILL_POSITION_DIFFUSION_HPP_
