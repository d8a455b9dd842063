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
#ifndef OTINFILL_TEXT_IO_HPP_
#define OTINFILL_TEXT_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otinfill/types.hpp"

namespace otinfill {

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// One element per line; a trailing newline does not produce an extra line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Whitespace-separated token ids.
TokenSequence parse_token_line(std::string_view line);
std::string format_token_line(const TokenSequence& seq);

std::vector<TokenSequence> read_token_file(const std::filesystem::path& path);
void write_token_file(const std::filesystem::path& path,
                      const std::vector<TokenSequence>& seqs);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace otinfill

#endif  // OTINFILL_TEXT_IO_HPP_
