// Copyright 2026 The PPS Toolkit Authors.
//
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pps/model.hpp"

namespace pps {

// PPSM container (little-endian, uncompressed):
//   magic "PPSM" | version u16 = 1 | reserved u16 = 0 |
//   width u32 | height u32 | width*height uids as u32
// The codec is bit-exact: decode(encode(m)) == m for every valid map.

inline constexpr std::uint16_t kPpsmVersion = 1;

std::vector<std::uint8_t> encode_ppsm(const LabelMap& map);
LabelMap decode_ppsm(std::span<const std::uint8_t> bytes);

/// Writes atomically (temp file + rename), so readers never observe a
/// truncated map.
void write_ppsm(const std::filesystem::path& path, const LabelMap& map);
LabelMap read_ppsm(const std::filesystem::path& path);

/// Atomic byte-blob writer shared by every file-producing code path.
void atomic_write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace pps
