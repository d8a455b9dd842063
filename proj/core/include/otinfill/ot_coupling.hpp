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
#ifndef OTINFILL_OT_COUPLING_HPP_
#define OTINFILL_OT_COUPLING_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "otinfill/random.hpp"
#include "otinfill/types.hpp"

// Exact sample-level optimal transport between ground-truth positions and
// limiting positions on the real line, under |a - b| cost.
//
// Prompt slots are matched by sorting (balanced problem). Response slots
// are matched with an order-preserving dynamic program that leaves the
// surplus limiting slots unmatched; those become pads whose ground-truth
// position is chosen so that their path is stationary in scaled space.
namespace otinfill {

struct MatchedPair {
  std::size_t source = 0;  // index into z0
  std::size_t target = 0;  // index into zT
  SlotClass cls = SlotClass::kResponse;
  double cost = 0.0;  // |scaled z0[source] - zT[target]|
};

struct CouplingPlan {
  std::vector<MatchedPair> match;
  std::vector<std::size_t> pad_targets;  // ascending target indices
  double total_cost = 0.0;
};

// Result of build_coupling. All three vectors have length L and are aligned
// slot-for-slot with zT.
struct Coupling {
  CouplingPlan plan;
  std::vector<double> padded_z0;      // unscaled ground-truth positions
  std::vector<int> source_of_target;  // -1 for pad slots
  std::vector<SlotClass> target_classes;  // zT classes with pads marked kPad
};

// Maps z0 (entries in [-l/L, l/L]) onto [-1, 1] by the factor L/l.
std::vector<double> scale_targets(std::span<const double> z0, int l, int L);

// Sort-based matching of two equally sized sets. Indices in the returned
// plan refer to the input spans; pairs are listed in ascending source order.
CouplingPlan couple_balanced(std::span<const double> sources,
                             std::span<const double> targets);

// Order-preserving matching of all m sources into m of the n >= m targets
// minimizing total |a - b|. Among optimal matchings the one placing sources
// on the leftmost admissible targets is returned.
CouplingPlan couple_unbalanced(std::span<const double> sources,
                               std::span<const double> targets);

// Class-respecting coupling of ground-truth positions z0 (length l, classes
// prompt/response) with limiting positions zT (length L). Matching happens
// after scaling z0 by L/l.
Coupling build_coupling(std::span<const double> z0,
                        std::span<const SlotClass> classes0,
                        std::span<const double> zT,
                        std::span<const SlotClass> classesT, int l, int L);

// Class-respecting but otherwise uniformly random matching with the same pad
// rule as build_coupling. This is the no-OT ablation; plan costs are the
// realized costs of the random matching.
Coupling random_coupling(std::span<const double> z0,
                         std::span<const SlotClass> classes0,
                         std::span<const double> zT,
                         std::span<const SlotClass> classesT, int l, int L,
                         Rng& rng);

}  // namespace otinfill

#endif  // OTINFILL_OT_COUPLING_HPP_
