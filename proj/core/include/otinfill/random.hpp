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

#ifndef OTINFILL_RANDOM_HPP_
#define OTINFILL_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace otinfill {

using Rng = std::mt19937_64;

// Mixes a base seed with a list of stream coordinates (step, sample index,
// ...) into an independent seed. Used so per-sample randomness does not
// depend on thread scheduling.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> coords);

inline Rng make_rng(std::uint64_t base,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(base, coords));
}

// Uniform on the open interval (lo, hi).
double uniform_open(Rng& rng, double lo, double hi);

}  // namespace otinfill

#endif  // OTINFILL_RANDOM_HPP_
