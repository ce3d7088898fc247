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
#include <optional>
#include <span>
#include <vector>

#include "partcons/types.hpp"

namespace partcons {

struct RetrievalSide {
  std::vector<std::int64_t> identities;
  std::vector<std::int64_t> cameras;
};

struct RetrievalProtocol {
  RetrievalSide query;
  RetrievalSide gallery;
  /// Drop gallery entries sharing both identity and camera with the query.
  bool camera_filter = true;
};

struct EvalReport {
  std::vector<double> cmc;  // cmc[r-1] = match rate within rank r
  double map = 0.0;
  std::size_t n_queries_used = 0;
  std::size_t excluded_queries = 0;
};

/// Rows are concatenated part embeddings. Gallery ranked by ascending squared
/// Euclidean distance, ties by gallery index. Queries without an admissible
/// positive are excluded and counted.
EvalReport evaluate_retrieval(const Matrix& query, const Matrix& gallery,
                              const RetrievalProtocol& protocol, std::size_t max_rank);

/// Fraction of unordered pairs on which the two partitions agree. 1 for n < 2.
double rand_index(const Partition& pred, const Partition& truth);

/// Hubert-Arabie adjusted Rand index (contingency-table closed form). When the
/// expected and maximum index coincide (both trivial) the result is 1.
double adjusted_rand_index(const Partition& pred, const Partition& truth);

struct LabelQuality {
  std::optional<double> precision;
  std::optional<double> recall;
};

/// Pair-counting precision / recall of a pseudo-labeled subset against the
/// true identities of the same items.
LabelQuality pairwise_label_quality(std::span<const std::size_t> items,
                                    std::span<const std::int64_t> pseudo_labels,
                                    const LabelTable& truth);

}  // namespace partcons
