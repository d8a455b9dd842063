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
#include "otinfill/ot_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace {

// Ties on value break by original index.
std::vector<std::size_t> stable_order(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return order;
}

// Costs are bounded by 2 per pair and L <= a few hundred; differences below
// this are rounding noise and count as ties.
constexpr double kTieTolerance = 1e-13;

}  // namespace

std::vector<double> scale_targets(std::span<const double> z0, int l, int L) {
  if (l <= 0) throw EmptySequenceError("scale_targets: l must be >= 1");
  if (l > L) {
    throw CapacityError("scale_targets: l=" + std::to_string(l) +
                        " exceeds L=" + std::to_string(L));
  }
  const double factor = static_cast<double>(L) / static_cast<double>(l);
  std::vector<double> out(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) {
    out[i] = std::clamp(z0[i] * factor, -1.0, 1.0);
  }
  return out;
}

CouplingPlan couple_balanced(std::span<const double> sources,
                             std::span<const double> targets) {
  if (sources.size() != targets.size()) {
    throw BalancedPreconditionError(
        "couple_balanced: " + std::to_string(sources.size()) + " sources vs " +
        std::to_string(targets.size()) + " targets");
  }
  const auto so = stable_order(sources);
  const auto to = stable_order(targets);
  CouplingPlan plan;
  plan.match.reserve(sources.size());
  for (std::size_t k = 0; k < so.size(); ++k) {
    const double c = std::abs(sources[so[k]] - targets[to[k]]);
    plan.match.push_back({so[k], to[k], SlotClass::kPrompt, c});
    plan.total_cost += c;
  }
  std::sort(plan.match.begin(), plan.match.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return a.source < b.source;
            });
  return plan;
}

CouplingPlan couple_unbalanced(std::span<const double> sources,
                               std::span<const double> targets) {
  const std::size_t m = sources.size();
  const std::size_t n = targets.size();
  if (m > n) {
    throw CapacityError("couple_unbalanced: " + std::to_string(m) +
                        " sources exceed " + std::to_string(n) + " targets");
  }
  const auto so = stable_order(sources);
  const auto to = stable_order(targets);

  // best[i][j]: minimum cost of matching the i smallest sources into the j
  // smallest targets, order-preserving. Infeasible when j < i.
  const std::size_t w = n + 1;
  std::vector<double> best((m + 1) * w, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return best[i * w + j];
  };
  for (std::size_t i = 1; i <= m; ++i) {
    at(i, i - 1) = HUGE_VAL;
    for (std::size_t j = i; j <= n; ++j) {
      const double pair =
          at(i - 1, j - 1) + std::abs(sources[so[i - 1]] - targets[to[j - 1]]);
      const double skip = j > i ? at(i, j - 1) : HUGE_VAL;
      at(i, j) = std::min(pair, skip);
    }
  }

  CouplingPlan plan;
  std::vector<bool> used(n, false);
  std::size_t i = m;
  std::size_t j = n;
  while (i > 0) {
    // Skipping the current target on ties pushes this source leftwards.
    if (j > i && at(i, j - 1) <= at(i, j) + kTieTolerance) {
      --j;
      continue;
    }
    const std::size_t s = so[i - 1];
    const std::size_t t = to[j - 1];
    const double c = std::abs(sources[s] - targets[t]);
    plan.match.push_back({s, t, SlotClass::kResponse, c});
    used[t] = true;
    --i;
    --j;
  }
  std::sort(plan.match.begin(), plan.match.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return a.source < b.source;
            });
  for (const auto& p : plan.match) plan.total_cost += p.cost;
  for (std::size_t t = 0; t < n; ++t) {
    if (!used[t]) plan.pad_targets.push_back(t);
  }
  return plan;
}

namespace {

struct ClassIndex {
  std::vector<std::size_t> src_p, src_r, tgt_p, tgt_r;
};

ClassIndex index_classes(std::span<const double> z0,
                         std::span<const SlotClass> classes0,
                         std::span<const double> zT,
                         std::span<const SlotClass> classesT, int l, int L) {
  if (z0.size() != classes0.size() || static_cast<int>(z0.size()) != l) {
    throw CouplingError("build_coupling: z0 has " + std::to_string(z0.size()) +
                        " entries, expected l=" + std::to_string(l));
  }
  if (zT.size() != classesT.size() || static_cast<int>(zT.size()) != L) {
    throw CouplingError("build_coupling: zT has " + std::to_string(zT.size()) +
                        " entries, expected L=" + std::to_string(L));
  }
  ClassIndex ix;
  auto& [src_p, src_r, tgt_p, tgt_r] = ix;
  for (std::size_t i = 0; i < classes0.size(); ++i) {
    switch (classes0[i]) {
      case SlotClass::kPrompt:
        src_p.push_back(i);
        break;
      case SlotClass::kResponse:
        src_r.push_back(i);
        break;
      case SlotClass::kPad:
        throw CouplingError("build_coupling: ground truth contains a pad slot");
    }
  }
  for (std::size_t i = 0; i < classesT.size(); ++i) {
    switch (classesT[i]) {
      case SlotClass::kPrompt:
        tgt_p.push_back(i);
        break;
      case SlotClass::kResponse:
        tgt_r.push_back(i);
        break;
      case SlotClass::kPad:
        throw CouplingError("build_coupling: limiting slots contain a pad");
    }
  }
  if (src_p.size() != tgt_p.size()) {
    throw CouplingError("build_coupling: prompt count " +
                        std::to_string(src_p.size()) + " in z0 vs " +
                        std::to_string(tgt_p.size()) + " in zT");
  }
  if (src_r.size() > tgt_r.size()) {
    throw CouplingError("build_coupling: " + std::to_string(src_r.size()) +
                        " response tokens exceed " +
                        std::to_string(tgt_r.size()) + " response slots");
  }
  return ix;
}

std::vector<double> gather(std::span<const double> v,
                           const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

// Lifts per-class plans (indices local to each class) into a full coupling.
Coupling assemble(std::span<const double> z0, std::span<const double> zT,
                  std::span<const SlotClass> classesT, int l, int L,
                  const ClassIndex& ix, const CouplingPlan& prompt,
                  const CouplingPlan& response) {
  const auto& [src_p, src_r, tgt_p, tgt_r] = ix;
  Coupling out;
  out.padded_z0.assign(L, 0.0);
  out.source_of_target.assign(L, -1);
  out.target_classes.assign(classesT.begin(), classesT.end());

  auto absorb = [&](const CouplingPlan& sub, const std::vector<std::size_t>& s,
                    const std::vector<std::size_t>& t, SlotClass cls) {
    for (const auto& p : sub.match) {
      const std::size_t source = s[p.source];
      const std::size_t target = t[p.target];
      out.plan.match.push_back({source, target, cls, p.cost});
      out.padded_z0[target] = z0[source];
      out.source_of_target[target] = static_cast<int>(source);
    }
  };
  absorb(prompt, src_p, tgt_p, SlotClass::kPrompt);
  absorb(response, src_r, tgt_r, SlotClass::kResponse);

  const double shrink = static_cast<double>(l) / static_cast<double>(L);
  for (std::size_t k : response.pad_targets) {
    const std::size_t target = tgt_r[k];
    out.plan.pad_targets.push_back(target);
    out.padded_z0[target] = zT[target] * shrink;
    out.target_classes[target] = SlotClass::kPad;
  }
  std::sort(out.plan.pad_targets.begin(), out.plan.pad_targets.end());
  std::sort(out.plan.match.begin(), out.plan.match.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return a.source < b.source;
            });
  out.plan.total_cost = prompt.total_cost + response.total_cost;
  return out;
}

}  // namespace

Coupling build_coupling(std::span<const double> z0,
                        std::span<const SlotClass> classes0,
                        std::span<const double> zT,
                        std::span<const SlotClass> classesT, int l, int L) {
  const ClassIndex ix = index_classes(z0, classes0, zT, classesT, l, L);
  const auto scaled = scale_targets(z0, l, L);
  const auto prompt =
      couple_balanced(gather(scaled, ix.src_p), gather(zT, ix.tgt_p));
  const auto response =
      couple_unbalanced(gather(scaled, ix.src_r), gather(zT, ix.tgt_r));
  return assemble(z0, zT, classesT, l, L, ix, prompt, response);
}

Coupling random_coupling(std::span<const double> z0,
                         std::span<const SlotClass> classes0,
                         std::span<const double> zT,
                         std::span<const SlotClass> classesT, int l, int L,
                         Rng& rng) {
  const ClassIndex ix = index_classes(z0, classes0, zT, classesT, l, L);
  const auto scaled = scale_targets(z0, l, L);
  auto shuffled_plan = [&](const std::vector<std::size_t>& src,
                           const std::vector<std::size_t>& tgt) {
    std::vector<std::size_t> perm(tgt.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = perm.size(); k > 1; --k) {
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      std::swap(perm[k - 1], perm[pick(rng)]);
    }
    CouplingPlan plan;
    std::vector<bool> used(tgt.size(), false);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double c = std::abs(scaled[src[k]] - zT[tgt[perm[k]]]);
      plan.match.push_back({k, perm[k], SlotClass::kResponse, c});
      plan.total_cost += c;
      used[perm[k]] = true;
    }
    for (std::size_t k = 0; k < tgt.size(); ++k) {
      if (!used[k]) plan.pad_targets.push_back(k);
    }
    return plan;
  };
  const auto prompt = shuffled_plan(ix.src_p, ix.tgt_p);
  const auto response = shuffled_plan(ix.src_r, ix.tgt_r);
  return assemble(z0, zT, classesT, l, L, ix, prompt, response);
}

}  // namespace otinfill
