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

#include "partcons/losses.hpp"
#include "partcons/rng.hpp"
#include "partcons/split.hpp"
#include "partcons/types.hpp"

namespace partcons {

/// f(x)^q = normalize(W_q x + b_q), one affine block per part.
struct EmbedderParams {
  std::size_t n_parts = 0;
  std::size_t raw_dim = 0;
  std::size_t dim = 0;
  std::vector<Matrix> weights;              // Q blocks of dim x raw_dim
  std::vector<std::vector<double>> biases;  // Q blocks of dim
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const EmbedderParams&) const = default;
};

/// Weights uniform in [-1/sqrt(raw_dim), 1/sqrt(raw_dim)], biases zero.
EmbedderParams init_params(std::size_t n_parts, std::size_t raw_dim, std::size_t dim,
                           std::uint64_t seed);

inline constexpr double kMinPreNormalization = 1e-8;

PartEmbeddingTensor forward(const EmbedderParams& params, const Matrix& features);

/// Affine classification head over concatenated part embeddings.
struct Classifier {
  Matrix weight;              // n_classes x (Q * d)
  std::vector<double> bias;   // n_classes

  std::size_t n_classes() const noexcept { return bias.size(); }
  bool operator==(const Classifier&) const = default;
};

Classifier init_classifier(std::size_t n_classes, std::size_t input_dim, std::uint64_t seed);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Matrix classifier_weight;
  std::vector<double> classifier_bias;
};

struct LossOptions {
  LossWeights weights;
  MixSpec mix;
  bool pm_hinge = true;
};

struct BatchLoss {
  double total = 0.0;
  double cross_entropy = 0.0;
  double triplet = 0.0;
  double partmixup = 0.0;
  double partmixup_sum = 0.0;
};

/// Value and exact gradient of the weighted total loss on one batch.
/// `classes` are classifier rows; `identities` group rows for the metric
/// losses; `keys` seed part mixing (see EmbeddingBatch).
BatchLoss backward(const EmbedderParams& params, const Classifier& classifier,
                   const Matrix& features, std::span<const std::size_t> classes,
                   std::span<const std::int64_t> identities,
                   std::span<const std::uint64_t> keys, const LossOptions& options,
                   Gradients* gradients);

struct PkBatch {
  std::vector<std::size_t> items;
  std::vector<std::int64_t> identities;
};

/// p identities (half pseudo-labeled when any exist), k images each; images
/// are drawn with replacement only when an identity has fewer than k. When
/// fewer than p identities exist, all are used.
PkBatch sample_pk_batch(const SplitState& split, std::size_t p, std::size_t k, Rng& rng);

struct TrainerConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::vector<std::size_t> lr_decay_epochs = {60, 80};
  double lr_decay_factor = 0.1;
  std::size_t batch_identities = 20;
  std::size_t batch_instances = 6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossWeights weights;
  std::size_t pm_max_replaced = 0;  // 0 = max(1, Q - 1)
  bool pm_hinge = true;
  std::uint64_t seed = 0;
  bool record_steps = false;

  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double learning_rate = 0.0;
  BatchLoss loss;
};

struct TrainResult {
  EmbedderParams params;
  std::size_t steps = 0;
  /// Total loss on a fixed probe batch before and after training.
  double probe_loss_start = 0.0;
  double probe_loss_end = 0.0;
  std::vector<StepRecord> records;  // filled when record_steps is set
};

/// Adam with bias correction on the labeled and pseudo-labeled items, with a
/// fresh classification head sized to the number of distinct identities.
TrainResult train(const EmbedderParams& initial, const SplitState& split,
                  const Matrix& features, const TrainerConfig& config);

}  // namespace partcons
