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
#include <span>
#include <vector>

#include "partcons/cluster.hpp"
#include "partcons/types.hpp"

namespace partcons {

/// Fraction of partitions that co-cluster each pair of items. Stored as exact
/// integer counts; value(i, j) = count / n_partitions.
class CoAssociationMatrix {
 public:
  CoAssociationMatrix() = default;
  CoAssociationMatrix(std::size_t n_items, std::size_t n_partitions,
                      std::vector<std::uint16_t> condensed_counts);

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_partitions() const noexcept { return n_partitions_; }

  std::size_t count(std::size_t i, std::size_t j) const;
  double value(std::size_t i, std::size_t j) const {
    return static_cast<double>(count(i, j)) / static_cast<double>(n_partitions_);
  }
  std::vector<double> dense() const;  // row-major N x N

  /// histogram[c] = number of unordered pairs i<j agreeing in exactly c parts.
  std::vector<std::uint64_t> agreement_histogram() const;

 private:
  std::size_t n_items_ = 0;
  std::size_t n_partitions_ = 1;
  std::vector<std::uint16_t> counts_;
};

CoAssociationMatrix co_association(std::span<const Partition> partitions);

/// Number of parts k (1 <= k <= Q) that must agree.
struct AgreementLevel {
  std::size_t required_parts = 0;
};

void validate_agreement(AgreementLevel level, std::size_t q_parts);

/// (Q - k)/Q + 1/(2Q): strictly between the achievable 1-M values (Q-k)/Q and
/// (Q-k+1)/Q, so rounding can never flip a merge decision.
double agreement_threshold(AgreementLevel level, std::size_t q_parts);

/// Agglomerates 1 - M (average linkage by default) and cuts at the agreement
/// threshold. Merging runs on integer disagreement counts, so ties are exact
/// and a cluster mean landing exactly on the threshold does not merge; the
/// returned dendrogram distances are rescaled to 1 - M units.
ClusteringResult consensus_clustering(const CoAssociationMatrix& m, AgreementLevel level,
                                      Linkage linkage = Linkage::kAverage);

Partition consensus_partition(const CoAssociationMatrix& m, AgreementLevel level,
                              std::size_t q_parts, Linkage linkage = Linkage::kAverage);

}  // namespace partcons
