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

#include <doctest.h>

#include "partcons/consensus.hpp"
#include "partcons/error.hpp"
#include "partcons/rng.hpp"

using namespace partcons;

namespace {

std::vector<Partition> random_partitions(std::size_t q, std::size_t n, std::size_t k, Rng& rng) {
  std::vector<Partition> out;
  for (std::size_t p = 0; p < q; ++p) {
    std::vector<std::int64_t> labels(n);
    for (auto& v : labels) v = static_cast<std::int64_t>(rng.below(k));
    out.push_back(Partition::from_labels(labels));
  }
  return out;
}

}  // namespace

TEST_CASE("co-association of identical partitions is binary") {
  const Partition p({0, 0, 1, 2, 1});
  const std::vector<Partition> parts(4, p);
  const auto m = co_association(parts);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(m.value(i, j) == (p[i] == p[j] ? 1.0 : 0.0));
    }
  }
  for (std::size_t k = 1; k <= 4; ++k) {
    for (auto linkage : {Linkage::kAverage, Linkage::kSingle, Linkage::kWard}) {
      CHECK(consensus_partition(m, {k}, 4, linkage) == p);
    }
  }
}

TEST_CASE("two-partition example") {
  const std::vector<Partition> parts = {Partition({0, 0, 1}), Partition({0, 1, 1})};
  const auto m = co_association(parts);
  const std::vector<double> expected = {1, 0.5, 0, 0.5, 1, 0.5, 0, 0.5, 1};
  CHECK(m.dense() == expected);

  CHECK(agreement_threshold({2}, 2) == 0.25);
  CHECK(consensus_partition(m, {2}, 2).n_clusters() == 3);

  CHECK(agreement_threshold({1}, 2) == 0.75);
  const auto loose = consensus_clustering(m, {1});
  CHECK(loose.partition.assignment() == std::vector<std::size_t>{0, 0, 1});
  REQUIRE(loose.dendrogram.merges.size() == 2);
  CHECK(loose.dendrogram.merges[0].distance == 0.5);
  CHECK(loose.dendrogram.merges[1].distance == 0.75);
}

TEST_CASE("all-singleton partitions give the identity matrix") {
  const std::vector<Partition> parts(3, Partition::singletons(4));
  const auto m = co_association(parts);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(m.value(i, j) == (i == j ? 1.0 : 0.0));
  }
  const auto h = m.agreement_histogram();
  CHECK(h == std::vector<std::uint64_t>{6, 0, 0, 0});
}

TEST_CASE("agreement thresholds") {
  CHECK(agreement_threshold({6}, 6) == doctest::Approx(1.0 / 12.0));
  CHECK(agreement_threshold({6}, 6) < 1.0 / 6.0);
  CHECK(agreement_threshold({1}, 1) == 0.5);
  CHECK(agreement_threshold({3}, 6) == doctest::Approx(7.0 / 12.0));
  CHECK_THROWS_AS(agreement_threshold({0}, 6), Error);
  try {
    agreement_threshold({7}, 6);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Q = 6") != std::string::npos);
  }
  // Strictly between the lattice values (Q-k)/Q and (Q-k+1)/Q.
  for (std::size_t q = 1; q <= 12; ++q) {
    for (std::size_t k = 1; k <= q; ++k) {
      const double t = agreement_threshold({k}, q);
      CHECK(t > static_cast<double>(q - k) / static_cast<double>(q));
      CHECK(t < static_cast<double>(q - k + 1) / static_cast<double>(q));
    }
  }
}

TEST_CASE("input validation") {
  const std::vector<Partition> mismatched = {Partition({0, 1}), Partition({0, 0, 1})};
  CHECK_THROWS_AS(co_association(mismatched), Error);
  CHECK_THROWS_AS(co_association(std::vector<Partition>{}), Error);
  const auto m = co_association(std::vector<Partition>(6, Partition({0, 1})));
  CHECK_THROWS_AS(consensus_partition(m, {7}, 6), Error);
  CHECK_THROWS_AS(consensus_partition(m, {3}, 5), Error);
}

TEST_CASE("empty input") {
  const auto m = co_association(std::vector<Partition>(3, Partition()));
  CHECK(m.n_items() == 0);
  CHECK(consensus_partition(m, {3}, 3).size() == 0);
}

TEST_CASE("strict agreement soundness") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t q = 1 + rng.below(6), n = 2 + rng.below(30);
    const auto parts = random_partitions(q, n, 1 + rng.below(5), rng);
    const auto m = co_association(parts);
    // Single linkage with k = Q: components of the full-agreement relation,
    // which is transitive, so every within-cluster pair agrees everywhere.
    const auto single = consensus_partition(m, {q}, q, Linkage::kSingle);
    // Average linkage on the same transitive relation gives the same clusters.
    const auto average = consensus_partition(m, {q}, q, Linkage::kAverage);
    CHECK(single == average);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (single[i] == single[j]) CHECK(m.count(i, j) == q);
        if (m.count(i, j) == q) CHECK(single[i] == single[j]);
      }
    }
  }
}

TEST_CASE("merges respect the agreement level") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t q = 2 + rng.below(6), n = 2 + rng.below(30);
    const std::size_t k = 1 + rng.below(q);
    const auto parts = random_partitions(q, n, 1 + rng.below(4), rng);
    const auto m = co_association(parts);
    const auto r = consensus_clustering(m, {k});
    // Decide in disagreement-count units: distinct average-linkage values
    // differ by far more than 1e-9, and a mean landing exactly on the
    // half-lattice threshold must not merge.
    const double cut = static_cast<double>(q - k) + 0.5;
    std::size_t applied = 0;
    for (const auto& merge : r.dendrogram.merges) {
      const double counts = merge.distance * static_cast<double>(q);
      if (!(counts < cut - 1e-9)) break;
      ++applied;
      // Mean agreement across the merged clusters exceeds k - 1/2 parts; a
      // direct singleton pair therefore agrees in at least k parts.
      CHECK(static_cast<double>(q) - counts > static_cast<double>(k) - 0.5);
      if (merge.new_size == 2 && m.count(merge.cluster_a, merge.cluster_b) < q) {
        CHECK(m.count(merge.cluster_a, merge.cluster_b) >= k);
      }
    }
    CHECK(r.partition.n_clusters() == n - applied);
  }
}

TEST_CASE("looser agreement never adds clusters") {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t q = 6, n = 5 + rng.below(40);
    const auto m = co_association(random_partitions(q, n, 2 + rng.below(4), rng));
    for (auto linkage : {Linkage::kAverage, Linkage::kSingle}) {
      std::size_t previous = 0;
      for (std::size_t k = q; k >= 1; --k) {
        const std::size_t c = consensus_partition(m, {k}, q, linkage).n_clusters();
        if (k < q) CHECK(c <= previous);
        previous = c;
      }
    }
  }
}

TEST_CASE("entries are multiples of 1/Q") {
  Rng rng(1);
  const auto m = co_association(random_partitions(6, 20, 3, rng));
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK(m.value(i, j) == m.value(j, i));
      CHECK(m.value(i, j) * 6.0 == doctest::Approx(static_cast<double>(m.count(i, j))));
    }
    CHECK(m.value(i, i) == 1.0);
  }
  std::uint64_t total = 0;
  for (auto c : m.agreement_histogram()) total += c;
  CHECK(total == 190);
}
