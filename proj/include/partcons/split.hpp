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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "partcons/types.hpp"

namespace partcons {

/// Labeled / unlabeled / pseudo-labeled subsets. Ground truth for unlabeled
/// items is deliberately absent: consumers that need it for reporting read
/// the LabelTable themselves.
struct SplitState {
  std::vector<std::size_t> labeled_items;
  std::vector<std::int64_t> labeled_ids;
  std::vector<std::size_t> unlabeled_items;
  std::vector<std::size_t> pseudo_items;   // subset of unlabeled_items
  std::vector<std::int64_t> pseudo_ids;    // >= pseudo_id_offset
  std::int64_t pseudo_id_offset = 0;       // > every identity in the label table
  std::size_t iteration = 0;

  void validate() const;
};

/// ceil(fraction * n_identities) identities become fully labeled, the rest
/// fully unlabeled. The labeled identities are a seeded random subset.
SplitState split_labeled(const LabelTable& labels, double labeled_fraction,
                         std::uint64_t seed);

}  // namespace partcons
