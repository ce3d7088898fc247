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

// Slow reference implementations used by the tests and by `selftest`.
// Independent of the production code paths on purpose: no shared helpers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "partcons/cluster.hpp"
#include "partcons/metrics.hpp"
#include "partcons/types.hpp"

namespace partcons::oracle {

struct NaiveMerge {
  std::size_t a = 0;  // smallest item index of each side, a < b
  std::size_t b = 0;
  double distance = 0.0;
  std::size_t new_size = 0;
};

struct NaiveClustering {
  std::vector<std::size_t> assignment;  // first-appearance labels
  std::vector<NaiveMerge> merges;       // full dendrogram
};

/// Recomputes every cluster-pair linkage from the member lists at every step.
/// Ward uses the centroid form sqrt(2 n_a n_b / (n_a + n_b)) |c_a - c_b|.
NaiveClustering naive_agglomerate(const Matrix& points, Linkage linkage, double threshold);

/// Single or average linkage on an explicit dissimilarity (row-major N x N).
NaiveClustering naive_agglomerate_matrix(const std::vector<double>& dissimilarity,
                                         std::size_t n, Linkage linkage, double threshold);

double naive_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);
double naive_adjusted_rand_index(const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b);

/// Ranks by counting how many admissible gallery rows precede each one.
EvalReport naive_retrieval(const Matrix& query, const Matrix& gallery,
                           const RetrievalProtocol& protocol, std::size_t max_rank);

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

/// Randomized comparisons of the production code against the references.
std::vector<SuiteResult> run_selftest(std::uint64_t seed, std::size_t cases_per_suite);

}  // namespace partcons::oracle
