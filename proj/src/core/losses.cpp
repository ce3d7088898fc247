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

#include "partcons/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "partcons/error.hpp"
#include "partcons/rng.hpp"

namespace partcons {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Counter-based stream for per-pair draws; cheaper to seed than mt19937_64.
class PairStream {
 public:
  explicit PairStream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_ += 0x9e3779b97f4a7c15ULL); }
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_;
};

std::vector<double> distance_matrix(const EmbeddingBatch& batch) {
  const std::size_t b = batch.size();
  std::vector<double> d(b * b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      const double v = pairwise_distance(batch.row(i), batch.row(j), batch.n_parts, batch.dim);
      d[i * b + j] = v;
      d[j * b + i] = v;
    }
  }
  return d;
}

/// Hardest positive per anchor; ties to the lowest row index.
std::vector<std::size_t> hardest_positives(const EmbeddingBatch& batch,
                                           const std::vector<double>& d) {
  const std::size_t b = batch.size();
  std::vector<std::size_t> pos(b, kNone);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i || batch.labels[j] != batch.labels[i]) continue;
      if (pos[i] == kNone || d[i * b + j] > d[i * b + pos[i]]) pos[i] = j;
    }
  }
  return pos;
}

/// grad[x] += scale * (x - y) and grad[y] -= scale * (x - y) over a part range.
void accumulate_pair(std::vector<double>& grad, const EmbeddingBatch& batch, std::size_t x,
                     std::size_t y, double scale, std::size_t first, std::size_t count) {
  const std::size_t len = batch.row_length();
  for (std::size_t c = first; c < first + count; ++c) {
    const double diff = batch.data[x * len + c] - batch.data[y * len + c];
    grad[x * len + c] += scale * diff;
    grad[y * len + c] -= scale * diff;
  }
}

void check_batch_shape(const EmbeddingBatch& batch) {
  if (batch.data.size() != batch.size() * batch.row_length()) {
    fail(ErrorCode::kShapeMismatch, "embedding batch data does not match B x Q x d");
  }
  require(batch.keys.empty() || batch.keys.size() == batch.size(),
          "embedding batch keys must be empty or one per row");
}

}  // namespace

void LossWeights::validate() const {
  require(lambda_ce >= 0.0 && lambda_t >= 0.0 && lambda_pm >= 0.0,
          "loss weights must be non-negative");
  require(std::isfinite(margin) && margin > 0.0, "margin must be > 0");
}

void validate_triplet_batch(const EmbeddingBatch& batch) {
  check_batch_shape(batch);
  std::map<std::int64_t, std::size_t> counts;
  for (auto l : batch.labels) ++counts[l];
  if (counts.size() < 2) {
    fail(ErrorCode::kInvalidArgument,
         "triplet batch needs at least 2 identities, got " + std::to_string(counts.size()));
  }
  for (const auto& [label, n] : counts) {
    if (n < 2) {
      fail(ErrorCode::kInvalidArgument, "triplet batch needs >= 2 instances per identity; "
                                        "identity " + std::to_string(label) + " has 1");
    }
  }
}

double pairwise_distance(std::span<const double> a, std::span<const double> b,
                         std::size_t n_parts, std::size_t dim) {
  if (a.size() != n_parts * dim || b.size() != n_parts * dim) {
    fail(ErrorCode::kShapeMismatch, "pairwise_distance: rows must both be Q x d = " +
                                        std::to_string(n_parts * dim) + " values");
  }
  double total = 0.0;
  for (std::size_t q = 0; q < n_parts; ++q) {
    double part = 0.0;
    for (std::size_t c = q * dim; c < (q + 1) * dim; ++c) {
      const double diff = a[c] - b[c];
      part += diff * diff;
    }
    total += part;
  }
  return total;
}

LossTerm triplet_batch_hard(const EmbeddingBatch& batch, double margin) {
  validate_triplet_batch(batch);
  const std::size_t b = batch.size();
  const auto d = distance_matrix(batch);
  const auto pos = hardest_positives(batch, d);
  LossTerm out;
  out.gradient.assign(batch.data.size(), 0.0);
  out.pre_hinge.resize(b);
  const double scale = 2.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t neg = kNone;
    for (std::size_t j = 0; j < b; ++j) {
      if (batch.labels[j] == batch.labels[i]) continue;
      if (neg == kNone || d[i * b + j] < d[i * b + neg]) neg = j;
    }
    const double term = margin + d[i * b + pos[i]] - d[i * b + neg];
    out.pre_hinge[i] = term;
    if (term <= 0.0) continue;
    out.sum += term;
    accumulate_pair(out.gradient, batch, i, pos[i], scale, 0, batch.row_length());
    accumulate_pair(out.gradient, batch, i, neg, -scale, 0, batch.row_length());
  }
  out.value = out.sum / static_cast<double>(b);
  return out;
}

std::size_t resolved_max_replaced(const MixSpec& spec, std::size_t n_parts) {
  const std::size_t r = spec.max_replaced == 0 ? std::max<std::size_t>(1, n_parts - 1)
                                               : spec.max_replaced;
  if (r < 1 || r > n_parts) {
    fail(ErrorCode::kInvalidArgument, "max replaced parts must satisfy 1 <= r <= Q = " +
                                          std::to_string(n_parts) + ", got " +
                                          std::to_string(r));
  }
  return r;
}

std::vector<std::size_t> replace_set(const MixSpec& spec, std::size_t n_parts,
                                     std::uint64_t anchor_key, std::uint64_t donor_key) {
  if (!spec.fixed_parts.empty()) {
    std::vector<std::size_t> fixed = spec.fixed_parts;
    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
    require(fixed.back() < n_parts, "fixed replace set names a part >= Q");
    return fixed;
  }
  const std::size_t r_max = resolved_max_replaced(spec, n_parts);
  PairStream stream(derive_seed(spec.seed, "mix", {anchor_key, donor_key}));
  const std::size_t r = 1 + static_cast<std::size_t>(stream.below(r_max));
  std::vector<std::size_t> parts(n_parts);
  std::iota(parts.begin(), parts.end(), 0);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.below(n_parts - i));
    std::swap(parts[i], parts[j]);
  }
  parts.resize(r);
  std::sort(parts.begin(), parts.end());
  return parts;
}

std::vector<double> mix_parts(std::span<const double> anchor, std::span<const double> donor,
                              std::span<const std::size_t> replace, std::size_t n_parts,
                              std::size_t dim) {
  if (anchor.size() != n_parts * dim || donor.size() != n_parts * dim) {
    fail(ErrorCode::kShapeMismatch, "mix_parts: rows must both be Q x d");
  }
  std::vector<double> out(anchor.begin(), anchor.end());
  for (std::size_t q : replace) {
    require(q < n_parts, "mix_parts: part index out of range");
    std::copy_n(donor.begin() + q * dim, dim, out.begin() + q * dim);
  }
  return out;
}

LossTerm partmixup_loss(const EmbeddingBatch& batch, double margin, const MixSpec& spec,
                        bool hinge) {
  validate_triplet_batch(batch);
  const std::size_t b = batch.size();
  const std::size_t q_parts = batch.n_parts;
  const std::size_t dim = batch.dim;
  const auto d = distance_matrix(batch);
  const auto pos = hardest_positives(batch, d);
  LossTerm out;
  out.gradient.assign(batch.data.size(), 0.0);
  out.pre_hinge.resize(b);
  const double scale = 2.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t donor = kNone;
    double closest = 0.0;
    std::vector<std::size_t> closest_parts;
    for (std::size_t j = 0; j < b; ++j) {
      if (batch.labels[j] == batch.labels[i]) continue;
      auto parts = replace_set(spec, q_parts, batch.key(i), batch.key(j));
      const auto mixed = mix_parts(batch.row(i), batch.row(j), parts, q_parts, dim);
      const double dist = pairwise_distance(batch.row(i), mixed, q_parts, dim);
      if (donor == kNone || dist < closest) {
        donor = j;
        closest = dist;
        closest_parts = std::move(parts);
      }
    }
    const double term = margin + d[i * b + pos[i]] - closest;
    out.pre_hinge[i] = term;
    if (hinge && term <= 0.0) continue;
    out.sum += term;
    accumulate_pair(out.gradient, batch, i, pos[i], scale, 0, batch.row_length());
    // Shared parts of the mixed negative are copies of the anchor and carry no
    // gradient; only the replaced parts tie anchor and donor together.
    for (std::size_t q : closest_parts) {
      accumulate_pair(out.gradient, batch, i, donor, -scale, q * dim, dim);
    }
  }
  out.value = out.sum / static_cast<double>(b);
  return out;
}

bool verify_mix_monotonicity(std::span<const double> anchor, std::span<const double> donor,
                             std::span<const std::size_t> smaller_set,
                             std::span<const std::size_t> larger_set, std::size_t n_parts,
                             std::size_t dim) {
  for (std::size_t q : smaller_set) {
    require(std::find(larger_set.begin(), larger_set.end(), q) != larger_set.end(),
            "verify_mix_monotonicity: smaller set must be a subset of the larger set");
  }
  const double full = pairwise_distance(anchor, donor, n_parts, dim);
  const double larger = pairwise_distance(
      anchor, mix_parts(anchor, donor, larger_set, n_parts, dim), n_parts, dim);
  const double smaller = pairwise_distance(
      anchor, mix_parts(anchor, donor, smaller_set, n_parts, dim), n_parts, dim);
  return full >= larger && larger >= smaller;
}

LossTerm cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  require(labels.size() == logits.rows(), "cross_entropy: one label per logit row");
  const std::size_t b = logits.rows();
  const std::size_t c = logits.cols();
  LossTerm out;
  out.gradient.assign(b * c, 0.0);
  if (b == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      fail(ErrorCode::kInvalidArgument, "cross_entropy: label " + std::to_string(labels[i]) +
                                            " out of range for " + std::to_string(c) +
                                            " classes");
    }
    auto row = logits.row(i);
    const double shift = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - shift);
    const double log_z = std::log(z) + shift;
    const double term = log_z - row[labels[i]];
    out.sum += term;
    for (std::size_t k = 0; k < c; ++k) {
      const double p = std::exp(row[k] - log_z);
      out.gradient[i * c + k] = (p - (k == labels[i] ? 1.0 : 0.0)) * inv_b;
    }
  }
  out.value = out.sum * inv_b;
  return out;
}

CombinedLoss total_loss(const LossComponents& components, const LossWeights& weights) {
  CombinedLoss out;
  out.value = weights.lambda_ce * components.cross_entropy.value +
              weights.lambda_t * components.triplet.value +
              weights.lambda_pm * components.partmixup.value;
  out.logits_gradient = components.cross_entropy.gradient;
  for (double& g : out.logits_gradient) g *= weights.lambda_ce;
  const std::size_t n =
      std::max(components.triplet.gradient.size(), components.partmixup.gradient.size());
  out.embedding_gradient.assign(n, 0.0);
  auto add = [&](const std::vector<double>& g, double w) {
    if (g.empty()) return;
    require(g.size() == n, "total_loss: embedding gradients differ in size");
    for (std::size_t i = 0; i < n; ++i) out.embedding_gradient[i] += w * g[i];
  };
  add(components.triplet.gradient, weights.lambda_t);
  add(components.partmixup.gradient, weights.lambda_pm);
  return out;
}

}  // namespace partcons
