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
#include "otinfill/position_diffusion.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace {

void check_same_size(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DomainError(std::string(where) + ": length mismatch " +
                      std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int n) {
  if (n <= 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (int k = 0; k < n; ++k) out[k] = lo + step * k;
  out.back() = hi;
  return out;
}

std::vector<double> build_z0(int l, int L) {
  if (l <= 0) throw EmptySequenceError("build_z0: l must be >= 1");
  if (l > L) {
    throw CapacityError("build_z0: l=" + std::to_string(l) + " exceeds L=" +
                        std::to_string(L));
  }
  if (l == 1) return {0.0};
  const double half = static_cast<double>(l) / static_cast<double>(L);
  return linspace(-half, half, l);
}

PositionVector sample_zT_random(int L, int l_p, Rng& rng) {
  if (l_p < 0 || l_p > L) {
    throw CapacityError("sample_zT_random: l_p=" + std::to_string(l_p) +
                        " outside [0, L=" + std::to_string(L) + "]");
  }
  PositionVector out;
  out.values.resize(L);
  for (double& v : out.values) v = uniform_open(rng, -1.0, 1.0);
  std::vector<int> idx(L);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates picks the prompt subset.
  for (int k = 0; k < l_p; ++k) {
    std::uniform_int_distribution<int> pick(k, L - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  out.classes.assign(L, SlotClass::kResponse);
  for (int k = 0; k < l_p; ++k) out.classes[idx[k]] = SlotClass::kPrompt;
  return out;
}

PositionVector sample_zT_uniform(int L, int l_p) {
  if (l_p < 0 || l_p > L) {
    throw CapacityError("sample_zT_uniform: l_p=" + std::to_string(l_p) +
                        " outside [0, L=" + std::to_string(L) + "]");
  }
  PositionVector out;
  out.values = linspace(-1.0, 1.0, l_p);
  const auto response = linspace(-1.0, 1.0, L - l_p);
  out.values.insert(out.values.end(), response.begin(), response.end());
  out.classes.assign(L, SlotClass::kResponse);
  std::fill_n(out.classes.begin(), l_p, SlotClass::kPrompt);
  return out;
}

std::vector<double> interpolate(std::span<const double> z0_padded,
                                std::span<const double> zT, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("interpolate: t=" + std::to_string(t) +
                      " outside [0, 1]");
  }
  check_same_size(z0_padded.size(), zT.size(), "interpolate");
  std::vector<double> out(zT.size());
  for (std::size_t i = 0; i < zT.size(); ++i) {
    out[i] = (1.0 - t) * z0_padded[i] + t * zT[i];
  }
  return out;
}

double position_loss(std::span<const double> v_pred,
                     std::span<const double> z0_padded,
                     std::span<const double> zT) {
  check_same_size(v_pred.size(), zT.size(), "position_loss");
  check_same_size(z0_padded.size(), zT.size(), "position_loss");
  if (zT.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < zT.size(); ++i) {
    const double r = v_pred[i] - (z0_padded[i] - zT[i]);
    total += r * r;
  }
  return total / static_cast<double>(zT.size());
}

std::vector<double> position_loss_grad(std::span<const double> v_pred,
                                       std::span<const double> z0_padded,
                                       std::span<const double> zT) {
  check_same_size(v_pred.size(), zT.size(), "position_loss_grad");
  std::vector<double> g(zT.size());
  const double scale = 2.0 / static_cast<double>(zT.size());
  for (std::size_t i = 0; i < zT.size(); ++i) {
    g[i] = scale * (v_pred[i] - (z0_padded[i] - zT[i]));
  }
  return g;
}

std::vector<double> reverse_position_step(std::span<const double> z_t,
                                          std::span<const double> v_pred,
                                          double dt) {
  check_same_size(z_t.size(), v_pred.size(), "reverse_position_step");
  if (!(dt > 0.0)) throw DomainError("reverse_position_step: dt must be > 0");
  std::vector<double> out(z_t.size());
  for (std::size_t i = 0; i < z_t.size(); ++i) {
    out[i] = std::clamp(z_t[i] + dt * v_pred[i], -1.0, 1.0);
  }
  return out;
}

}  // namespace otinfill
