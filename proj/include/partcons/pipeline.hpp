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
#include <functional>
#include <optional>
#include <vector>

#include "partcons/cluster.hpp"
#include "partcons/consensus.hpp"
#include "partcons/embedder.hpp"
#include "partcons/metrics.hpp"
#include "partcons/split.hpp"
#include "partcons/types.hpp"

namespace partcons {

struct PseudoLabels {
  std::vector<std::size_t> items;         // input positions that were kept
  std::vector<std::int64_t> identities;   // dense 0..K-1, first-appearance order

  bool operator==(const PseudoLabels&) const = default;
};

/// Keeps items whose cluster has at least min_size members.
PseudoLabels filter_clusters(const Partition& partition, std::size_t min_size);

struct EvalConfig {
  bool camera_filter = true;
  std::size_t queries_per_identity = 1;
  std::vector<std::size_t> ranks = {1, 5, 10, 20};
};

struct PipelineConfig {
  std::size_t n_parts = 6;     // embedder output shape
  std::size_t embed_dim = 16;
  std::size_t min_cluster_size = 5;
  std::size_t n_iterations = 5;
  std::size_t agreement = 0;  // required parts; 0 = all Q
  Linkage consensus_linkage = Linkage::kAverage;
  bool early_stop = true;
  AgglomerativeConfig cluster_config;
  TrainerConfig trainer_config;
  EvalConfig eval;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Data for a run. Training code sees only `features`; `truth` is read for
/// reporting. The test set is optional.
struct PipelineData {
  Matrix features;
  LabelTable truth;
  Matrix test_features;
  LabelTable test_labels;
};

struct RetrievalSummary {
  std::vector<std::size_t> ranks;
  std::vector<double> cmc_at;  // cmc at each of `ranks`
  double map = 0.0;
  std::size_t n_queries_used = 0;
  std::size_t excluded_queries = 0;
};

struct IterationReport {
  std::size_t iteration = 0;
  std::vector<std::size_t> clusters_per_part;
  std::size_t consensus_clusters = 0;
  std::size_t n_unlabeled = 0;
  std::size_t n_pseudo_labeled = 0;
  std::size_t n_pseudo_identities = 0;
  std::size_t train_items = 0;
  std::size_t train_steps = 0;
  double probe_loss_start = 0.0;
  double probe_loss_end = 0.0;
  LabelQuality label_quality;
  std::optional<RetrievalSummary> retrieval;
};

struct IterationResult {
  EmbedderParams params;
  SplitState state;
  IterationReport report;
};

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration);

/// One pass: fresh init, train, embed X^U, cluster per part, consensus,
/// rebuild X^PL from scratch.
IterationResult run_iteration(const SplitState& state, const PipelineData& data,
                              const PipelineConfig& config);

/// Steps 3-5 alone on precomputed embeddings of the unlabeled items.
struct PseudoLabelStep {
  std::vector<Partition> part_partitions;
  CoAssociationMatrix co_association;
  Partition consensus;
  PseudoLabels pseudo;
};

PseudoLabelStep pseudo_label_step(const PartEmbeddingTensor& embeddings,
                                  const PipelineConfig& config);

struct PipelineResult {
  EmbedderParams params;
  SplitState final_state;
  std::vector<IterationReport> reports;
  bool converged = false;
};

PipelineResult run_pipeline(const PipelineData& data, const SplitState& split,
                            const PipelineConfig& config);

using IterationFn = std::function<IterationResult(const SplitState&)>;

/// The outer loop with a caller-supplied iteration body. Stops after
/// n_iterations, or early when two consecutive iterations produce identical
/// pseudo-labels.
PipelineResult run_pipeline_loop(const SplitState& split, std::size_t n_iterations,
                                 bool early_stop, const IterationFn& step);

/// Trains on the labeled subset alone (same trainer and seed as `iteration`)
/// and evaluates on the test set.
RetrievalSummary supervised_baseline(const PipelineData& data, const SplitState& split,
                                     const PipelineConfig& config, std::size_t iteration);

RetrievalSummary evaluate_model(const EmbedderParams& params, const Matrix& features,
                                const LabelTable& labels, const EvalConfig& config);

}  // namespace partcons
