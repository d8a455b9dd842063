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
#include "otinfill/optimizer.hpp"

#include <cmath>
#include <vector>

namespace otinfill {
namespace {

std::span<double> flat(Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> flat(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

AdamWState AdamWState::for_parameters(const ParameterSet& params) {
  return {ParameterSet::zeros_like(params), ParameterSet::zeros_like(params), 0};
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, std::int64_t step,
                  const AdamWConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) +
                           cfg.weight_decay * params[i]);
  }
}

void optimize(ParameterSet& params, const ParameterGradients& grads,
              const AdamWConfig& cfg, AdamWState& state) {
  ++state.step;
  std::vector<Matrix*> p, m, v;
  std::vector<const Matrix*> g;
  params.visit([&](const std::string&, Matrix& x) { p.push_back(&x); });
  state.m.visit([&](const std::string&, Matrix& x) { m.push_back(&x); });
  state.v.visit([&](const std::string&, Matrix& x) { v.push_back(&x); });
  grads.visit([&](const std::string&, const Matrix& x) { g.push_back(&x); });
  for (std::size_t k = 0; k < p.size(); ++k) {
    adamw_update(flat(*p[k]), flat(*g[k]), flat(*m[k]), flat(*v[k]),
                 state.step, cfg);
  }
}

double global_norm(const ParameterGradients& grads) {
  double sq = 0.0;
  grads.visit(
      [&](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
  return std::sqrt(sq);
}

double clip_global_norm(ParameterGradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    grads.visit([&](const std::string&, Matrix& m) { m *= s; });
  }
  return norm;
}

}  // namespace otinfill
