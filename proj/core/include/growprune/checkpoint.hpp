/*
 * Copyright 2026 The growprune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Binary checkpoint: "GPCK", u32 version, little-endian sections, trailing
// FNV-1a-64 checksum over everything before it. Masks are stored as packed
// bitsets. Decoding validates the whole payload before returning anything.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "growprune/network.hpp"
#include "growprune/training.hpp"

namespace growprune {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkModel model;
  std::optional<TrainingState> state;
  /// Output of a non-recoverable compress; must not be updated again.
  bool deployment_only = false;
  std::string metrics;  // CSV snapshot of the run so far
  std::map<std::string, std::string> metadata;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);

/// FormatError (with offset) on bad magic, version mismatch, truncation,
/// checksum mismatch or inconsistent contents.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Atomic whole-file write (temp + rename).
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace growprune
