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
#include "otinfill/ot_cache.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <thread>

#include "otinfill/errors.hpp"

namespace otinfill {
namespace {

constexpr std::uint64_t kLimitStream = 0x07;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("ot cache: bad number '" + s + "'");
  }
  if (used != s.size()) throw FormatError("ot cache: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

}  // namespace

Rng limit_stream(std::uint64_t seed, std::uint64_t sample_id) {
  return make_rng(seed, {kLimitStream, sample_id});
}

PositionVector draw_limit(int L, int l_p, LimitMode mode, Rng& rng) {
  return mode == LimitMode::kRandom ? sample_zT_random(L, l_p, rng)
                                    : sample_zT_uniform(L, l_p);
}

OTCacheEntry compute_ot_entry(const TrainingExample& example,
                              std::uint64_t sample_id, int L, LimitMode mode,
                              std::uint64_t seed) {
  const int l = example.length();
  Rng rng = limit_stream(seed, sample_id);
  OTCacheEntry e;
  e.sample_id = sample_id;
  e.length = l;
  e.zT = draw_limit(L, example.num_prompt(), mode, rng);
  const auto z0 = build_z0(l, L);
  std::vector<SlotClass> classes0(l);
  for (int i = 0; i < l; ++i) {
    classes0[i] = example.prompt[i] ? SlotClass::kPrompt : SlotClass::kResponse;
  }
  e.coupling = build_coupling(z0, classes0, e.zT.values, e.zT.classes, l, L);
  return e;
}

std::vector<OTCacheEntry> precompute_ot(std::span<const TrainingExample> batch,
                                        int L, LimitMode mode,
                                        std::uint64_t seed,
                                        std::uint64_t first_id,
                                        int num_threads) {
  std::vector<OTCacheEntry> out(batch.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = compute_ot_entry(batch[i], first_id + i, L, mode, seed);
    }
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, num_threads));
  if (workers == 1 || batch.size() < 2) {
    work(0, batch.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (batch.size() + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(batch.size(), b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, w, b, e] {
      try {
        work(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

std::string serialize_ot_cache(const std::vector<OTCacheEntry>& entries) {
  std::string out = "otinfill-otcache 1\n";
  for (const auto& e : entries) {
    const int L = static_cast<int>(e.zT.size());
    out += "entry " + std::to_string(e.sample_id) + " " +
           std::to_string(e.length) + " " + std::to_string(L) + " " +
           fmt(e.coupling.plan.total_cost) + "\n";
    out += "zT";
    for (double v : e.zT.values) out += " " + fmt(v);
    out += "\nclasses";
    for (SlotClass c : e.zT.classes) out += " " + std::string(to_string(c));
    out += "\n";
    for (const auto& p : e.coupling.plan.match) {
      out += std::to_string(p.source) + " " + std::to_string(p.target) + " " +
             std::string(to_string(p.cls)) + " " + fmt(p.cost) + "\n";
    }
    for (std::size_t t : e.coupling.plan.pad_targets) {
      out += "- " + std::to_string(t) + " pad 0\n";
    }
    out += "padded_z0";
    for (double v : e.coupling.padded_z0) out += " " + fmt(v);
    out += "\nend\n";
  }
  return out;
}

std::vector<OTCacheEntry> deserialize_ot_cache(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "otinfill-otcache 1") {
    throw FormatError("ot cache: missing or unsupported header");
  }
  std::vector<OTCacheEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto head = split(line);
    if (head.size() != 5 || head[0] != "entry") {
      throw FormatError("ot cache: expected entry line, got '" + line + "'");
    }
    OTCacheEntry e;
    e.sample_id = std::stoull(head[1]);
    e.length = std::stoi(head[2]);
    const int L = std::stoi(head[3]);
    e.coupling.plan.total_cost = parse_double(head[4]);

    auto read_fields = [&](const char* tag) {
      if (!std::getline(in, line)) throw FormatError("ot cache: truncated");
      auto f = split(line);
      if (f.empty() || f[0] != tag || static_cast<int>(f.size()) != L + 1) {
        throw FormatError(std::string("ot cache: bad '") + tag + "' line");
      }
      f.erase(f.begin());
      return f;
    };
    for (const auto& s : read_fields("zT")) e.zT.values.push_back(parse_double(s));
    for (const auto& s : read_fields("classes")) {
      e.zT.classes.push_back(slot_class_from_string(s));
    }
    e.coupling.source_of_target.assign(L, -1);
    e.coupling.target_classes = e.zT.classes;
    for (;;) {
      if (!std::getline(in, line)) throw FormatError("ot cache: truncated");
      if (line.rfind("padded_z0", 0) == 0) break;
      auto f = split(line);
      if (f.size() != 4) throw FormatError("ot cache: bad pair '" + line + "'");
      const std::size_t target = std::stoul(f[1]);
      if (target >= static_cast<std::size_t>(L)) {
        throw FormatError("ot cache: target index out of range");
      }
      if (f[0] == "-") {
        e.coupling.plan.pad_targets.push_back(target);
        e.coupling.target_classes[target] = SlotClass::kPad;
        continue;
      }
      MatchedPair p;
      p.source = std::stoul(f[0]);
      p.target = target;
      p.cls = slot_class_from_string(f[2]);
      p.cost = parse_double(f[3]);
      e.coupling.plan.match.push_back(p);
      e.coupling.source_of_target[target] = static_cast<int>(p.source);
    }
    auto f = split(line);
    if (static_cast<int>(f.size()) != L + 1) {
      throw FormatError("ot cache: bad padded_z0 line");
    }
    for (int i = 1; i <= L; ++i) e.coupling.padded_z0.push_back(parse_double(f[i]));
    if (!std::getline(in, line) || line != "end") {
      throw FormatError("ot cache: missing end marker");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void OTCache::insert(std::vector<OTCacheEntry> entries) {
  for (auto& e : entries) entries_.insert_or_assign(e.sample_id, std::move(e));
}

const OTCacheEntry& OTCache::get(const TrainingExample& example,
                                 std::uint64_t sample_id, int L,
                                 LimitMode mode, std::uint64_t seed) {
  auto it = entries_.find(sample_id);
  if (it != entries_.end()) {
    const OTCacheEntry& e = it->second;
    const auto prompts = std::count(e.zT.classes.begin(), e.zT.classes.end(),
                                    SlotClass::kPrompt);
    if (e.length == example.length() && static_cast<int>(e.zT.size()) == L &&
        prompts == example.num_prompt()) {
      ++hits_;
      return e;
    }
  }
  // Absent or built for a different example shape: recompute.
  ++misses_;
  auto entry = compute_ot_entry(example, sample_id, L, mode, seed);
  if (it != entries_.end()) {
    it->second = std::move(entry);
    return it->second;
  }
  return entries_.emplace(sample_id, std::move(entry)).first->second;
}

}  // namespace otinfill
