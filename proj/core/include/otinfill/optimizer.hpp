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
#ifndef OTINFILL_OPTIMIZER_HPP_
#define OTINFILL_OPTIMIZER_HPP_

#include <cstdint>
#include <span>

#include "otinfill/denoiser.hpp"

namespace otinfill {

// AdamW with decoupled weight decay.
struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamWState {
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;

  static AdamWState for_parameters(const ParameterSet& params);
};

// Flat update for one tensor. `step` is the 1-based index of this update.
void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, std::int64_t step,
                  const AdamWConfig& cfg);

void optimize(ParameterSet& params, const ParameterGradients& grads,
              const AdamWConfig& cfg, AdamWState& state);

double global_norm(const ParameterGradients& grads);

// Rescales so the global norm is at most max_norm. Returns the norm before
// clipping.
double clip_global_norm(ParameterGradients& grads, double max_norm);

}  // namespace otinfill

#endif  // OTINFILL_OPTIMIZER_HPP_
