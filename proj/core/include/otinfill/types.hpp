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

#ifndef OTINFILL_TYPES_HPP_
#define OTINFILL_TYPES_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

namespace otinfill {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

// Partition of slots. Pad is only ever assigned by the coupler.
enum class SlotClass : std::uint8_t { kPrompt = 0, kResponse = 1, kPad = 2 };

std::string_view to_string(SlotClass c);
SlotClass slot_class_from_string(std::string_view s);

// Token ids 0 .. size-3 are ordinary; the two highest ids are PAD and MASK.
struct Vocabulary {
  int size = 0;

  TokenId mask() const { return size - 1; }
  TokenId pad() const { return size - 2; }
  int num_ordinary() const { return size - 2; }
  bool is_ordinary(TokenId t) const { return t >= 0 && t < size - 2; }
};

// Positions of L slots together with their classes.
struct PositionVector {
  std::vector<double> values;
  std::vector<SlotClass> classes;

  std::size_t size() const { return values.size(); }
};

// Joint state of the reverse process.
struct DiffusionState {
  TokenSequence tokens;
  std::vector<double> positions;
  std::vector<SlotClass> classes;
  double t = 1.0;
};

}  // namespace otinfill

#endif  // OTINFILL_TYPES_HPP_
