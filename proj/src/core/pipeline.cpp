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

#include "partcons/pipeline.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "partcons/error.hpp"
#include "partcons/log.hpp"

namespace partcons {
namespace {

Matrix gather(const Matrix& features, const std::vector<std::size_t>& items) {
  Matrix out(items.size(), features.cols());
  for (std::size_t r = 0; r < items.size(); ++r) {
    require(items[r] < features.rows(), "item index out of range for the feature matrix");
    auto src = features.row(items[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

TrainerConfig trainer_for(const PipelineConfig& config, std::size_t iteration) {
  TrainerConfig t = config.trainer_config;
  t.seed = derive_seed(iteration_seed(config.seed, iteration), "train");
  return t;
}

EmbedderParams fresh_params(const PipelineConfig& config, std::size_t raw_dim,
                            std::size_t iteration) {
  return init_params(config.n_parts, raw_dim, config.embed_dim,
                     derive_seed(iteration_seed(config.seed, iteration), "init"));
}

bool same_pseudo_labels(const SplitState& a, const SplitState& b) {
  if (a.pseudo_items != b.pseudo_items) return false;
  return Partition::from_labels(a.pseudo_ids)
      .same_clustering(Partition::from_labels(b.pseudo_ids));
}

}  // namespace

PseudoLabels filter_clusters(const Partition& partition, std::size_t min_size) {
  require(min_size >= 1, "min_cluster_size must be >= 1");
  const auto sizes = partition.cluster_sizes();
  PseudoLabels out;
  std::map<std::size_t, std::int64_t> relabel;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const std::size_t c = partition[i];
    if (sizes[c] < min_size) continue;
    auto it = relabel.try_emplace(c, static_cast<std::int64_t>(relabel.size())).first;
    out.items.push_back(i);
    out.identities.push_back(it->second);
  }
  return out;
}

void PipelineConfig::validate() const {
  require(n_parts >= 1 && embed_dim >= 1, "embedder shape must be positive");
  require(min_cluster_size >= 1, "min_cluster_size must be >= 1");
  require(n_iterations >= 1, "n_iterations must be >= 1");
  if (agreement != 0) validate_agreement({agreement}, n_parts);
  cluster_config.validate();
  trainer_config.validate();
  require(eval.queries_per_identity >= 1, "queries_per_identity must be >= 1");
  require(!eval.ranks.empty(), "at least one evaluation rank is required");
  for (auto r : eval.ranks) require(r >= 1, "evaluation ranks start at 1");
}

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(seed, "iteration", {iteration});
}

PseudoLabelStep pseudo_label_step(const PartEmbeddingTensor& embeddings,
                                  const PipelineConfig& config) {
  const std::size_t q_parts = embeddings.n_parts();
  const AgreementLevel level{config.agreement == 0 ? q_parts : config.agreement};
  validate_agreement(level, q_parts);
  require(config.min_cluster_size >= 1, "min_cluster_size must be >= 1");
  PseudoLabelStep step;
  step.part_partitions = cluster_parts(embeddings, config.cluster_config);
  step.co_association = co_association(step.part_partitions);
  step.consensus =
      consensus_partition(step.co_association, level, q_parts, config.consensus_linkage);
  step.pseudo = filter_clusters(step.consensus, config.min_cluster_size);
  return step;
}

RetrievalSummary evaluate_model(const EmbedderParams& params, const Matrix& features,
                                const LabelTable& labels, const EvalConfig& config) {
  labels.check_items(features.rows());
  require(config.queries_per_identity >= 1, "queries_per_identity must be >= 1");
  require(!config.ranks.empty(), "at least one evaluation rank is required");

  std::vector<std::size_t> query_items, gallery_items;
  RetrievalProtocol protocol;
  protocol.camera_filter = config.camera_filter;
  std::map<std::int64_t, std::size_t> taken;
  for (const auto& row : labels.rows()) {
    auto& n = taken[row.identity];
    RetrievalSide& side = n < config.queries_per_identity ? protocol.query : protocol.gallery;
    (n < config.queries_per_identity ? query_items : gallery_items).push_back(row.item);
    side.identities.push_back(row.identity);
    side.cameras.push_back(row.camera);
    ++n;
  }
  const auto embedded = forward(params, features);
  const Matrix all = concat_parts(embedded);
  const std::size_t max_rank = *std::max_element(config.ranks.begin(), config.ranks.end());
  const EvalReport report =
      evaluate_retrieval(gather(all, query_items), gather(all, gallery_items), protocol,
                         max_rank);
  RetrievalSummary summary;
  summary.ranks = config.ranks;
  for (auto r : config.ranks) summary.cmc_at.push_back(report.cmc[r - 1]);
  summary.map = report.map;
  summary.n_queries_used = report.n_queries_used;
  summary.excluded_queries = report.excluded_queries;
  return summary;
}

IterationResult run_iteration(const SplitState& state, const PipelineData& data,
                              const PipelineConfig& config) {
  config.validate();
  state.validate();
  const std::size_t iteration = state.iteration + 1;
  if (state.labeled_items.empty() && iteration == 1) {
    fail(ErrorCode::kInvalidArgument, "the labeled set is empty; nothing to train on");
  }

  IterationResult result;
  IterationReport& report = result.report;
  report.iteration = iteration;
  report.n_unlabeled = state.unlabeled_items.size();
  report.train_items = state.labeled_items.size() + state.pseudo_items.size();

  const EmbedderParams init = fresh_params(config, data.features.cols(), iteration);
  TrainResult trained = train(init, state, data.features, trainer_for(config, iteration));
  report.train_steps = trained.steps;
  report.probe_loss_start = trained.probe_loss_start;
  report.probe_loss_end = trained.probe_loss_end;
  result.params = std::move(trained.params);

  SplitState next = state;
  next.pseudo_items.clear();
  next.pseudo_ids.clear();
  next.iteration = iteration;
  if (!state.unlabeled_items.empty()) {
    const auto embedded = forward(result.params, gather(data.features, state.unlabeled_items));
    const PseudoLabelStep step = pseudo_label_step(embedded, config);
    for (const auto& p : step.part_partitions) {
      report.clusters_per_part.push_back(p.n_clusters());
    }
    report.consensus_clusters = step.consensus.n_clusters();
    for (std::size_t j = 0; j < step.pseudo.items.size(); ++j) {
      next.pseudo_items.push_back(state.unlabeled_items[step.pseudo.items[j]]);
      next.pseudo_ids.push_back(state.pseudo_id_offset + step.pseudo.identities[j]);
    }
    for (auto id : step.pseudo.identities) {
      report.n_pseudo_identities =
          std::max(report.n_pseudo_identities, static_cast<std::size_t>(id) + 1);
    }
  }
  report.n_pseudo_labeled = next.pseudo_items.size();
  if (data.truth.size() > 0) {
    report.label_quality = pairwise_label_quality(next.pseudo_items, next.pseudo_ids, data.truth);
  }
  if (data.test_labels.size() > 0) {
    report.retrieval =
        evaluate_model(result.params, data.test_features, data.test_labels, config.eval);
  }
  log_message(LogLevel::kInfo, "iteration " + std::to_string(iteration) + ": " +
                                   std::to_string(report.n_pseudo_labeled) + " of " +
                                   std::to_string(report.n_unlabeled) +
                                   " unlabeled items pseudo-labeled");
  next.validate();
  result.state = std::move(next);
  return result;
}

PipelineResult run_pipeline_loop(const SplitState& split, std::size_t n_iterations,
                                 bool early_stop, const IterationFn& step) {
  require(n_iterations >= 1, "n_iterations must be >= 1");
  PipelineResult out;
  SplitState state = split;
  for (std::size_t i = 1; i <= n_iterations; ++i) {
    IterationResult r = step(state);
    out.reports.push_back(std::move(r.report));
    out.params = std::move(r.params);
    const bool unchanged = i >= 2 && same_pseudo_labels(state, r.state);
    state = std::move(r.state);
    if (unchanged) {
      out.converged = true;
      if (early_stop) break;
    }
  }
  out.final_state = std::move(state);
  return out;
}

PipelineResult run_pipeline(const PipelineData& data, const SplitState& split,
                            const PipelineConfig& config) {
  config.validate();
  data.truth.check_items(data.features.rows());
  return run_pipeline_loop(split, config.n_iterations, config.early_stop,
                           [&](const SplitState& s) { return run_iteration(s, data, config); });
}

RetrievalSummary supervised_baseline(const PipelineData& data, const SplitState& split,
                                     const PipelineConfig& config, std::size_t iteration) {
  config.validate();
  require(iteration >= 1, "iteration numbers start at 1");
  require(data.test_labels.size() > 0, "the supervised baseline needs a test set");
  SplitState labeled_only = split;
  labeled_only.pseudo_items.clear();
  labeled_only.pseudo_ids.clear();
  const EmbedderParams init = fresh_params(config, data.features.cols(), iteration);
  const TrainResult trained =
      train(init, labeled_only, data.features, trainer_for(config, iteration));
  return evaluate_model(trained.params, data.test_features, data.test_labels, config.eval);
}

}  // namespace partcons
