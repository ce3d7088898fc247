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

#include "partcons/types.hpp"

namespace partcons {

struct LossWeights {
  double lambda_ce = 1.0;
  double lambda_t = 1.0;
  double lambda_pm = 1.0;
  double margin = 0.3;

  void validate() const;
};

/// B rows of Q x d part embeddings with identity labels. `keys` are stable
/// per-row ids (dataset item indices) that seed the part-mixing RNG, so loss
/// values do not depend on row order; empty means "row position".
struct EmbeddingBatch {
  std::size_t n_parts = 1;
  std::size_t dim = 1;
  std::vector<double> data;
  std::vector<std::int64_t> labels;
  std::vector<std::uint64_t> keys;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t row_length() const noexcept { return n_parts * dim; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * row_length(), row_length()};
  }
  std::uint64_t key(std::size_t i) const { return keys.empty() ? i : keys[i]; }
};

/// Throws unless the batch has >= 2 identities and >= 2 rows per identity.
void validate_triplet_batch(const EmbeddingBatch& batch);

struct LossTerm {
  double value = 0.0;            // mean over anchors
  double sum = 0.0;              // same terms, summed
  std::vector<double> gradient;  // d value / d input, input layout
  std::vector<double> pre_hinge; // per-anchor term before max(0, .)
};

/// sum_q ||a^q - b^q||^2 (squared Euclidean over the concatenation).
double pairwise_distance(std::span<const double> a, std::span<const double> b,
                         std::size_t n_parts, std::size_t dim);

/// Batch-hard triplet loss. Hardest positive / negative ties go to the lowest
/// row index; inactive hinges contribute zero gradient.
LossTerm triplet_batch_hard(const EmbeddingBatch& batch, double margin);

struct MixSpec {
  /// Upper bound r_max on replaced parts; 0 selects max(1, Q - 1).
  std::size_t max_replaced = 0;
  std::uint64_t seed = 0;
  /// When non-empty, every (anchor, donor) pair replaces exactly these parts.
  std::vector<std::size_t> fixed_parts;
};

std::size_t resolved_max_replaced(const MixSpec& spec, std::size_t n_parts);

/// Replaced part indices for one ordered (anchor, donor) pair: size uniform on
/// [1, r_max], parts uniform without replacement, sorted ascending.
std::vector<std::size_t> replace_set(const MixSpec& spec, std::size_t n_parts,
                                     std::uint64_t anchor_key, std::uint64_t donor_key);

/// Part q comes from the donor when q is in replace_set, else from the anchor.
std::vector<double> mix_parts(std::span<const double> anchor, std::span<const double> donor,
                              std::span<const std::size_t> replace_set,
                              std::size_t n_parts, std::size_t dim);

/// Every batch row of another identity donates parts to one mixed negative
/// per anchor; the loss pairs the hardest positive with the closest mixed
/// negative. With hinge = false the bracket is used as-is (may go negative).
LossTerm partmixup_loss(const EmbeddingBatch& batch, double margin, const MixSpec& spec,
                        bool hinge = true);

/// D(a, donor) >= D(a, mix(S'')) >= D(a, mix(S')) for S' subset of S''.
bool verify_mix_monotonicity(std::span<const double> anchor, std::span<const double> donor,
                             std::span<const std::size_t> smaller_set,
                             std::span<const std::size_t> larger_set,
                             std::size_t n_parts, std::size_t dim);

/// Mean softmax cross-entropy; gradient is w.r.t. the logits.
LossTerm cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

struct LossComponents {
  LossTerm cross_entropy;  // gradient w.r.t. logits
  LossTerm triplet;        // gradient w.r.t. embeddings
  LossTerm partmixup;      // gradient w.r.t. embeddings
};

struct CombinedLoss {
  double value = 0.0;
  std::vector<double> logits_gradient;
  std::vector<double> embedding_gradient;
};

CombinedLoss total_loss(const LossComponents& components, const LossWeights& weights);

}  // namespace partcons
