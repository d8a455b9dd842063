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
#ifndef OTINFILL_CHECKPOINT_HPP_
#define OTINFILL_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "otinfill/denoiser.hpp"

// Checkpoint layout (version 1):
//
//   otinfill-checkpoint 1\n
//   <key> <value>\n ...        denoiser config, one field per line
//   tensors <count>\n
//   then per tensor, in ParameterSet::visit order:
//     <name> <rows> <cols>\n followed by rows*cols little-endian doubles
//
// Doubles are stored as raw IEEE-754 bytes, so save/load is bit-exact.
namespace otinfill {

std::string serialize_parameters(const ParameterSet& params);
ParameterSet deserialize_parameters(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path,
                     const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace otinfill

#endif  // OTINFILL_CHECKPOINT_HPP_
