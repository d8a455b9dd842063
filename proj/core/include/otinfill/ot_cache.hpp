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
#ifndef OTINFILL_OT_CACHE_HPP_
#define OTINFILL_OT_CACHE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "otinfill/corpus.hpp"
#include "otinfill/ot_coupling.hpp"
#include "otinfill/position_diffusion.hpp"

// Precomputed couplings. Each entry is a pure function of (example, sample
// id, L, limit mode, seed), so a cached entry equals a fresh computation.
//
// Record file (version 1), one block per entry:
//
//   otinfill-otcache 1
//   entry <sample_id> <l> <L> <total_cost>
//   zT <L values>
//   classes <L of prompt|response>
//   <source> <target> <class> <cost>      one line per matched pair
//   - <target> pad 0                      one line per pad slot
//   padded_z0 <L values>
//   end
//
// Reals are printed with 17 significant digits and round-trip exactly.
namespace otinfill {

struct OTCacheEntry {
  std::uint64_t sample_id = 0;
  int length = 0;
  PositionVector zT;
  Coupling coupling;
};

// Random stream used for the limiting draw of one sample.
Rng limit_stream(std::uint64_t seed, std::uint64_t sample_id);

PositionVector draw_limit(int L, int l_p, LimitMode mode, Rng& rng);

OTCacheEntry compute_ot_entry(const TrainingExample& example,
                              std::uint64_t sample_id, int L, LimitMode mode,
                              std::uint64_t seed);

// Entries for batch[i] get sample id first_id + i. Work is split across
// `num_threads` workers; the output order does not depend on it.
std::vector<OTCacheEntry> precompute_ot(std::span<const TrainingExample> batch,
                                        int L, LimitMode mode,
                                        std::uint64_t seed,
                                        std::uint64_t first_id = 0,
                                        int num_threads = 1);

std::string serialize_ot_cache(const std::vector<OTCacheEntry>& entries);
std::vector<OTCacheEntry> deserialize_ot_cache(const std::string& text);

class OTCache {
 public:
  void insert(std::vector<OTCacheEntry> entries);

  // Returns the cached entry for `sample_id` or computes and stores it.
  const OTCacheEntry& get(const TrainingExample& example,
                          std::uint64_t sample_id, int L, LimitMode mode,
                          std::uint64_t seed);

  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::unordered_map<std::uint64_t, OTCacheEntry> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace otinfill

#endif  // OTINFILL_OT_CACHE_HPP_
