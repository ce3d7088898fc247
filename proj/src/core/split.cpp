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

#include "partcons/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "partcons/error.hpp"
#include "partcons/rng.hpp"

namespace partcons {

void SplitState::validate() const {
  require(labeled_items.size() == labeled_ids.size(), "split: labeled ids misaligned");
  require(pseudo_items.size() == pseudo_ids.size(), "split: pseudo ids misaligned");
  std::unordered_set<std::size_t> labeled(labeled_items.begin(), labeled_items.end());
  std::unordered_set<std::size_t> unlabeled;
  for (std::size_t i : unlabeled_items) {
    require(!labeled.count(i), "split: item " + std::to_string(i) + " is both labeled and unlabeled");
    unlabeled.insert(i);
  }
  for (std::size_t i : pseudo_items) {
    require(unlabeled.count(i) == 1, "split: pseudo-labeled item not in the unlabeled subset");
  }
  for (std::int64_t id : pseudo_ids) {
    require(id >= pseudo_id_offset, "split: pseudo identity below the pseudo namespace");
  }
  for (std::int64_t id : labeled_ids) {
    require(id < pseudo_id_offset, "split: labeled identity inside the pseudo namespace");
  }
}

SplitState split_labeled(const LabelTable& labels, double labeled_fraction,
                         std::uint64_t seed) {
  require(labeled_fraction > 0.0 && labeled_fraction <= 1.0,
          "labeled_fraction must lie in (0, 1], got " + std::to_string(labeled_fraction));
  auto ids = labels.distinct_identities();
  const double wanted = labeled_fraction * static_cast<double>(ids.size());
  require(wanted >= 1.0 - 1e-9, "labeled_fraction * n_identities must be >= 1");
  // Guard against 1/3 * 30 = 10.000000000000002 rounding up to 11.
  auto n_labeled = static_cast<std::size_t>(std::ceil(wanted - 1e-9));
  n_labeled = std::min(n_labeled, ids.size());

  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids.begin(), ids.end());
  const std::set<std::int64_t> labeled_set(ids.begin(), ids.begin() + n_labeled);

  SplitState state;
  std::int64_t max_id = -1;
  auto rows = labels.rows();
  std::sort(rows.begin(), rows.end(),
            [](const LabelRow& a, const LabelRow& b) { return a.item < b.item; });
  for (const auto& r : rows) {
    max_id = std::max(max_id, r.identity);
    if (labeled_set.count(r.identity)) {
      state.labeled_items.push_back(r.item);
      state.labeled_ids.push_back(r.identity);
    } else {
      state.unlabeled_items.push_back(r.item);
    }
  }
  state.pseudo_id_offset = max_id + 1;
  return state;
}

}  // namespace partcons
