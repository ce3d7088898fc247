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
#include <string>
#include <string_view>
#include <vector>

#include "partcons/types.hpp"

namespace partcons {

enum class Linkage { kWard, kAverage, kSingle };

const char* linkage_name(Linkage linkage) noexcept;
Linkage parse_linkage(std::string_view name);

enum class MergeOrder {
  /// Exact greedy order with lexicographic (distance, a, b) tie-breaking.
  kGreedy,
  /// Nearest-neighbor chain; identical to kGreedy on inputs without distance
  /// ties, O(N^2) worst case.
  kNearestNeighborChain,
};

struct AgglomerativeConfig {
  Linkage linkage = Linkage::kWard;
  double distance_threshold = 2.0;
  MergeOrder order = MergeOrder::kGreedy;

  void validate() const;
};

/// Clusters are named by slot: leaves are slots 0..N-1 and a merge of slots
/// a < b stores the union in slot a, so a slot id is always the smallest item
/// index in its cluster.
struct Merge {
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double distance = 0.0;
  std::size_t new_size = 0;
};

struct Dendrogram {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;  // non-decreasing distance for monotone linkages
};

struct ClusteringResult {
  Partition partition;
  Dendrogram dendrogram;
};

/// Condensed upper-triangular N x N dissimilarity matrix (i < j).
class CondensedMatrix {
 public:
  CondensedMatrix() = default;
  explicit CondensedMatrix(std::size_t n, double fill = 0.0)
      : n_(n), values_(n < 2 ? 0 : n * (n - 1) / 2, fill) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }
  double operator()(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
  double& at(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

CondensedMatrix euclidean_distances(const Matrix& points);

/// Greedy bottom-up clustering of Euclidean points. Merging continues while
/// the smallest linkage distance is strictly below the threshold; the
/// dendrogram always runs to completion.
ClusteringResult agglomerate(const Matrix& points, const AgglomerativeConfig& config);

/// Same, on a precomputed dissimilarity matrix. Ward treats the entries as
/// Euclidean distances.
ClusteringResult agglomerate_precomputed(CondensedMatrix dissimilarity,
                                         const AgglomerativeConfig& config);

/// Applies merges in order until the first with distance >= threshold.
Partition cut_dendrogram(const Dendrogram& dendrogram, double threshold);

/// One independent clustering per part, in part order.
std::vector<Partition> cluster_parts(const PartEmbeddingTensor& tensor,
                                     const AgglomerativeConfig& config);

}  // namespace partcons
