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
#include <vector>

#include "oracles.hpp"
#include "otinfill/errors.hpp"
#include "otinfill/ot_coupling.hpp"
#include "otinfill/position_diffusion.hpp"

namespace otinfill {
namespace {

using oracles::brute_force_ot;

TEST(ScaleTargets, SpecExamples) {
  std::vector<double> a{-0.5, 0.5};
  EXPECT_EQ(scale_targets(a, 2, 4), (std::vector<double>{-1.0, 1.0}));
  std::vector<double> b{0.0};
  EXPECT_EQ(scale_targets(b, 1, 8), (std::vector<double>{0.0}));
  std::vector<double> c{-0.25, 0.0, 0.25};
  EXPECT_EQ(scale_targets(c, 3, 12), (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(ScaleTargets, Errors) {
  std::vector<double> none;
  EXPECT_THROW(scale_targets(none, 0, 4), EmptySequenceError);
  std::vector<double> five(5, 0.0);
  EXPECT_THROW(scale_targets(five, 5, 4), CapacityError);
}

TEST(CoupleBalanced, SortsBothSides) {
  std::vector<double> s{-1.0, 1.0};
  std::vector<double> t{0.7, -0.3};
  const CouplingPlan plan = couple_balanced(s, t);
  ASSERT_EQ(plan.match.size(), 2u);
  EXPECT_EQ(plan.match[0].source, 0u);
  EXPECT_EQ(plan.match[0].target, 1u);
  EXPECT_EQ(plan.match[1].source, 1u);
  EXPECT_EQ(plan.match[1].target, 0u);
  EXPECT_NEAR(plan.total_cost, 1.0, 1e-15);
}

TEST(CoupleBalanced, IdentityHasZeroCost) {
  std::vector<double> s{-0.2, 0.4};
  const CouplingPlan plan = couple_balanced(s, s);
  EXPECT_EQ(plan.total_cost, 0.0);
  for (const auto& m : plan.match) EXPECT_EQ(m.source, m.target);
}

TEST(CoupleBalanced, SizeMismatchThrows) {
  std::vector<double> s{0.0};
  std::vector<double> t{0.0, 1.0};
  EXPECT_THROW(couple_balanced(s, t), BalancedPreconditionError);
}

TEST(CoupleBalanced, MatchesPermutationOracle) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(5), t(5);
    for (auto& x : s) x = u(rng);
    for (auto& x : t) x = u(rng);
    std::sort(s.begin(), s.end());
    const auto oracle =
        brute_force_ot(s, std::vector<int>(5, 0), t, std::vector<int>(5, 0));
    EXPECT_NEAR(couple_balanced(s, t).total_cost, oracle.cost, 1e-12);
  }
}

TEST(CoupleUnbalanced, SingleSource) {
  std::vector<double> s{0.0};
  std::vector<double> t{-0.8, 0.1, 0.9};
  const CouplingPlan plan = couple_unbalanced(s, t);
  ASSERT_EQ(plan.match.size(), 1u);
  EXPECT_EQ(plan.match[0].target, 1u);
  EXPECT_EQ(plan.pad_targets, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(plan.total_cost, 0.1, 1e-15);
}

TEST(CoupleUnbalanced, EmptySources) {
  std::vector<double> s;
  std::vector<double> t{0.3, -0.3};
  const CouplingPlan plan = couple_unbalanced(s, t);
  EXPECT_TRUE(plan.match.empty());
  EXPECT_EQ(plan.pad_targets.size(), 2u);
  EXPECT_EQ(plan.total_cost, 0.0);
}

TEST(CoupleUnbalanced, LeftmostTieBreak) {
  std::vector<double> s{-0.5, 0.5};
  std::vector<double> t{-0.6, -0.4, 0.4, 0.6};
  const CouplingPlan plan = couple_unbalanced(s, t);
  ASSERT_EQ(plan.match.size(), 2u);
  EXPECT_NEAR(plan.total_cost, 0.2, 1e-12);
  EXPECT_EQ(plan.match[0].target, 0u);
  EXPECT_EQ(plan.match[1].target, 2u);
}

TEST(CoupleUnbalanced, TooManySourcesThrows) {
  std::vector<double> s{0.0, 0.1};
  std::vector<double> t{0.0};
  EXPECT_THROW(couple_unbalanced(s, t), CapacityError);
}

TEST(BuildCoupling, NoPadsWhenFull) {
  const int L = 4;
  const auto z0 = build_z0(L, L);
  std::vector<SlotClass> c0(L, SlotClass::kResponse);
  std::vector<double> zT{0.9, -0.1, 0.3, -0.7};
  std::vector<SlotClass> cT(L, SlotClass::kResponse);
  const Coupling cp = build_coupling(z0, c0, zT, cT, L, L);
  EXPECT_TRUE(cp.plan.pad_targets.empty());
  std::vector<double> sorted = cp.padded_z0;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, z0);
  for (int j = 0; j < L; ++j) {
    EXPECT_EQ(cp.padded_z0[j], z0[cp.source_of_target[j]]);
  }
}

TEST(BuildCoupling, PadFormula) {
  // L=4, l=2, one pad target at 0.8 must get ground truth 0.8 * 2 / 4.
  std::vector<double> z0 = build_z0(2, 4);
  std::vector<SlotClass> c0(2, SlotClass::kResponse);
  std::vector<double> zT{-0.9, 0.8, 0.85, -0.95};
  std::vector<SlotClass> cT(4, SlotClass::kResponse);
  const Coupling cp = build_coupling(z0, c0, zT, cT, 2, 4);
  ASSERT_EQ(cp.plan.pad_targets.size(), 2u);
  bool saw = false;
  for (std::size_t j : cp.plan.pad_targets) {
    EXPECT_EQ(cp.target_classes[j], SlotClass::kPad);
    EXPECT_EQ(cp.source_of_target[j], -1);
    EXPECT_NEAR(cp.padded_z0[j], zT[j] * 2.0 / 4.0, 1e-12);
    if (zT[j] == 0.8) {
      EXPECT_DOUBLE_EQ(cp.padded_z0[j], 0.4);
      saw = true;
    }
  }
  EXPECT_TRUE(saw);
}

TEST(BuildCoupling, PurePromptlessGeneration) {
  std::vector<double> z0 = build_z0(3, 6);
  std::vector<SlotClass> c0(3, SlotClass::kResponse);
  std::vector<double> zT{0.5, -0.5, 0.0, 0.9, -0.9, 0.2};
  std::vector<SlotClass> cT(6, SlotClass::kResponse);
  const Coupling cp = build_coupling(z0, c0, zT, cT, 3, 6);
  for (const auto& m : cp.plan.match) EXPECT_EQ(m.cls, SlotClass::kResponse);
  EXPECT_EQ(cp.plan.match.size(), 3u);
}

TEST(BuildCoupling, ClassCountMismatchThrows) {
  std::vector<double> z0 = build_z0(2, 4);
  std::vector<SlotClass> c0{SlotClass::kPrompt, SlotClass::kResponse};
  std::vector<double> zT{0.1, 0.2, 0.3, 0.4};
  std::vector<SlotClass> cT(4, SlotClass::kResponse);
  EXPECT_THROW(build_coupling(z0, c0, zT, cT, 2, 4), CouplingError);
}

TEST(BuildCoupling, InterSetCrossingAllowed) {
  // The prompt token sits left of the response token in z0 but its only
  // limiting slot is far right, so the two paths must cross.
  std::vector<double> z0 = build_z0(2, 2);
  std::vector<SlotClass> c0{SlotClass::kPrompt, SlotClass::kResponse};
  std::vector<double> zT{0.9, -0.9};
  std::vector<SlotClass> cT{SlotClass::kPrompt, SlotClass::kResponse};
  const Coupling cp = build_coupling(z0, c0, zT, cT, 2, 2);
  EXPECT_EQ(cp.source_of_target[0], 0);
  EXPECT_EQ(cp.source_of_target[1], 1);
  const double s0 = z0[0], s1 = z0[1];
  EXPECT_LT((s0 - s1) * (zT[0] - zT[1]), 0.0);
}

TEST(BuildCoupling, PadsDoNotChangeMatchedCost) {
  std::vector<double> z0 = build_z0(3, 6);
  std::vector<SlotClass> c0{SlotClass::kResponse, SlotClass::kPrompt,
                            SlotClass::kResponse};
  std::vector<double> zT{0.5, -0.5, 0.0, 0.9, -0.9, 0.2};
  std::vector<SlotClass> cT{SlotClass::kResponse, SlotClass::kResponse,
                            SlotClass::kPrompt, SlotClass::kResponse,
                            SlotClass::kResponse, SlotClass::kResponse};
  const Coupling cp = build_coupling(z0, c0, zT, cT, 3, 6);
  double sum = 0.0;
  for (const auto& m : cp.plan.match) sum += m.cost;
  EXPECT_NEAR(cp.plan.total_cost, sum, 1e-15);
}

TEST(BuildCoupling, AgreesWithBruteForceAndNeverCrosses) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int L = 1 + static_cast<int>(rng() % 7);
    const int l = 1 + static_cast<int>(rng() % L);
    const int lp = static_cast<int>(rng() % (l + 1));
    const auto z0 = build_z0(l, L);
    std::vector<SlotClass> c0(l, SlotClass::kResponse);
    std::vector<std::size_t> idx(l);
    for (int i = 0; i < l; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < lp; ++i) c0[idx[i]] = SlotClass::kPrompt;
    const PositionVector zT = sample_zT_random(L, lp, rng);

    const Coupling cp = build_coupling(z0, c0, zT.values, zT.classes, l, L);

    std::vector<double> scaled(l);
    for (int i = 0; i < l; ++i) scaled[i] = z0[i] * L / l;
    std::vector<int> sl(l), tl(L);
    for (int i = 0; i < l; ++i) sl[i] = static_cast<int>(c0[i]);
    for (int j = 0; j < L; ++j) tl[j] = static_cast<int>(zT.classes[j]);
    const auto oracle = brute_force_ot(scaled, sl, zT.values, tl);
    EXPECT_NEAR(cp.plan.total_cost, oracle.cost, 1e-12);

    for (const auto& a : cp.plan.match) {
      for (const auto& b : cp.plan.match) {
        if (a.cls != b.cls) continue;
        EXPECT_GE((scaled[a.source] - scaled[b.source]) *
                      (zT.values[a.target] - zT.values[b.target]),
                  0.0);
      }
    }
  }
}

TEST(RandomCoupling, RespectsClassesAndPadRule) {
  Rng rng(5);
  const int L = 8, l = 5;
  const auto z0 = build_z0(l, L);
  std::vector<SlotClass> c0{SlotClass::kPrompt, SlotClass::kResponse,
                            SlotClass::kResponse, SlotClass::kPrompt,
                            SlotClass::kResponse};
  const PositionVector zT = sample_zT_random(L, 2, rng);
  const Coupling cp = random_coupling(z0, c0, zT.values, zT.classes, l, L, rng);
  EXPECT_EQ(cp.plan.pad_targets.size(), 3u);
  for (int j = 0; j < L; ++j) {
    const int s = cp.source_of_target[j];
    if (s < 0) {
      EXPECT_NEAR(cp.padded_z0[j], zT.values[j] * l / L, 1e-12);
    } else {
      EXPECT_EQ(c0[s], zT.classes[j]);
      EXPECT_EQ(cp.padded_z0[j], z0[s]);
    }
  }
}

}  // namespace
}  // namespace otinfill
