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

#include "partcons/consensus.hpp"

#include <limits>
#include <string>

#include "partcons/error.hpp"
#include "partcons/parallel.hpp"

namespace partcons {

CoAssociationMatrix::CoAssociationMatrix(std::size_t n_items, std::size_t n_partitions,
                                         std::vector<std::uint16_t> condensed_counts)
    : n_items_(n_items), n_partitions_(n_partitions), counts_(std::move(condensed_counts)) {
  require(n_partitions_ >= 1, "co-association needs at least one partition");
  require(counts_.size() == (n_items_ < 2 ? 0 : n_items_ * (n_items_ - 1) / 2),
          "co-association count array has the wrong length");
  for (auto c : counts_) require(c <= n_partitions_, "co-association count exceeds Q");
}

std::size_t CoAssociationMatrix::count(std::size_t i, std::size_t j) const {
  if (i == j) return n_partitions_;
  if (i > j) std::swap(i, j);
  return counts_[i * (2 * n_items_ - i - 1) / 2 + (j - i - 1)];
}

std::vector<double> CoAssociationMatrix::dense() const {
  std::vector<double> out(n_items_ * n_items_);
  for (std::size_t i = 0; i < n_items_; ++i) {
    for (std::size_t j = 0; j < n_items_; ++j) out[i * n_items_ + j] = value(i, j);
  }
  return out;
}

std::vector<std::uint64_t> CoAssociationMatrix::agreement_histogram() const {
  std::vector<std::uint64_t> h(n_partitions_ + 1, 0);
  for (auto c : counts_) ++h[c];
  return h;
}

CoAssociationMatrix co_association(std::span<const Partition> partitions) {
  require(!partitions.empty(), "co_association needs at least one partition");
  require(partitions.size() <= std::numeric_limits<std::uint16_t>::max(),
          "too many partitions for co-association counts");
  const std::size_t n = partitions.front().size();
  for (const auto& p : partitions) {
    if (p.size() != n) {
      fail(ErrorCode::kShapeMismatch, "partitions cover different item counts (" +
                                          std::to_string(p.size()) + " vs " +
                                          std::to_string(n) + ")");
    }
  }
  std::vector<std::uint16_t> counts(n < 2 ? 0 : n * (n - 1) / 2, 0);
  parallel_for(n, [&](std::size_t i) {
    std::size_t at = i * (2 * n - i - 1) / 2;
    for (std::size_t j = i + 1; j < n; ++j, ++at) {
      std::uint16_t c = 0;
      for (const auto& p : partitions) c += p[i] == p[j] ? 1 : 0;
      counts[at] = c;
    }
  });
  return CoAssociationMatrix(n, partitions.size(), std::move(counts));
}

void validate_agreement(AgreementLevel level, std::size_t q_parts) {
  if (level.required_parts < 1 || level.required_parts > q_parts) {
    fail(ErrorCode::kInvalidArgument,
         "agreement level must satisfy 1 <= k <= Q = " + std::to_string(q_parts) + ", got " +
             std::to_string(level.required_parts));
  }
}

double agreement_threshold(AgreementLevel level, std::size_t q_parts) {
  validate_agreement(level, q_parts);
  const double q = static_cast<double>(q_parts);
  const double k = static_cast<double>(level.required_parts);
  return (q - k) / q + 1.0 / (2.0 * q);
}

ClusteringResult consensus_clustering(const CoAssociationMatrix& m, AgreementLevel level,
                                      Linkage linkage) {
  const std::size_t q = m.n_partitions();
  validate_agreement(level, q);
  const std::size_t n = m.n_items();
  // Q * (1 - M) is an integer disagreement count; Q * threshold = Q - k + 1/2.
  CondensedMatrix disagreement(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      disagreement.at(i, j) = static_cast<double>(q - m.count(i, j));
    }
  }
  AgglomerativeConfig config;
  config.linkage = linkage;
  config.distance_threshold =
      static_cast<double>(q - level.required_parts) + 0.5;
  ClusteringResult result = agglomerate_precomputed(std::move(disagreement), config);
  for (Merge& merge : result.dendrogram.merges) merge.distance /= static_cast<double>(q);
  return result;
}

Partition consensus_partition(const CoAssociationMatrix& m, AgreementLevel level,
                              std::size_t q_parts, Linkage linkage) {
  if (q_parts != m.n_partitions()) {
    fail(ErrorCode::kShapeMismatch, "matrix was built from " +
                                        std::to_string(m.n_partitions()) +
                                        " partitions, not " + std::to_string(q_parts));
  }
  return consensus_clustering(m, level, linkage).partition;
}

}  // namespace partcons
