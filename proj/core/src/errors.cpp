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

#include "otinfill/errors.hpp"
#include "otinfill/types.hpp"

#include <string>

namespace otinfill {

std::string_view to_string(SlotClass c) {
  switch (c) {
    case SlotClass::kPrompt:
      return "prompt";
    case SlotClass::kResponse:
      return "response";
    case SlotClass::kPad:
      return "pad";
  }
  return "?";
}

SlotClass slot_class_from_string(std::string_view s) {
  if (s == "prompt") return SlotClass::kPrompt;
  if (s == "response") return SlotClass::kResponse;
  if (s == "pad") return SlotClass::kPad;
  throw FormatError("unknown slot class '" + std::string(s) + "'");
}

}  // namespace otinfill
