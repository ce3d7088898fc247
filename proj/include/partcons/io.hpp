// Copyright 2026 The partcons Authors.
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

// PET binary layout (little-endian):
//   char[4]  magic "PETB"
//   uint32   version (1)
//   uint32   N, Q, d
//   float32  payload[N*Q*d], [item][part][component] order
//
// Label tables and partitions are CSV with fixed headers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "partcons/types.hpp"

namespace partcons {

inline constexpr char kPetMagic[4] = {'P', 'E', 'T', 'B'};
inline constexpr std::uint32_t kPetVersion = 1;
inline constexpr double kLoadRenormTolerance = 1e-4;

void save_pet(const PetArray& array, const std::filesystem::path& path);
PetArray load_pet(const std::filesystem::path& path);

void save_tensor(const PartEmbeddingTensor& tensor, const std::filesystem::path& path);
/// Part vectors drifting from unit norm by more than the tensor tolerance but
/// at most kLoadRenormTolerance are re-normalized (and logged); larger drift
/// raises kNormalization.
PartEmbeddingTensor load_tensor(const std::filesystem::path& path);

void save_labels(const LabelTable& labels, const std::filesystem::path& path);
LabelTable load_labels(const std::filesystem::path& path);

void save_partition(const Partition& partition, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path);

/// `item,identity` rows for a pseudo-labeled subset.
void save_assignments(const std::vector<std::size_t>& items,
                      const std::vector<std::int64_t>& labels,
                      const std::filesystem::path& path);
void load_assignments(const std::filesystem::path& path, std::vector<std::size_t>& items,
                      std::vector<std::int64_t>& labels);

/// Writes via a sibling temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace partcons
