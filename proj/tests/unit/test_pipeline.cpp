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

#include <algorithm>
#include <map>
#include <set>

#include "partcons/error.hpp"
#include "partcons/pipeline.hpp"
#include "partcons/synth.hpp"

using namespace partcons;

namespace {

struct Setup {
  PipelineData data;
  SplitState split;
  PipelineConfig config;
};

Setup small_setup(double noise, std::uint64_t seed) {
  SynthConfig s;
  s.n_identities = 12;
  s.images_per_identity = 6;
  s.n_parts = 3;
  s.dim = 8;
  s.raw_dim = 24;
  s.noise_sigma = noise;
  s.part_confusion = 0.0;
  s.test_identities = 6;
  s.seed = seed;
  const SynthData synth = generate(s);
  Setup out;
  out.data.features = synth.train.raw;
  out.data.truth = synth.train.labels;
  out.data.test_features = synth.test.raw;
  out.data.test_labels = synth.test.labels;
  out.split = split_labeled(synth.train.labels, 1.0 / 3.0, seed);
  out.config.n_parts = 3;
  out.config.embed_dim = 8;
  out.config.n_iterations = 2;
  out.config.cluster_config.distance_threshold = 0.5;
  out.config.trainer_config.epochs = 4;
  out.config.trainer_config.batch_identities = 4;
  out.config.trainer_config.batch_instances = 3;
  out.config.trainer_config.learning_rate = 1e-2;
  out.config.trainer_config.lr_decay_epochs = {};
  out.config.seed = seed;
  return out;
}

// A fake iteration that hands out a scripted sequence of pseudo labelings.
struct Script {
  std::vector<std::vector<std::int64_t>> labels;
  std::size_t calls = 0;

  IterationResult operator()(const SplitState& s) {
    IterationResult r;
    r.state = s;
    r.state.iteration = s.iteration + 1;
    const auto& l = labels[std::min(calls, labels.size() - 1)];
    r.state.pseudo_items.clear();
    r.state.pseudo_ids.clear();
    for (std::size_t j = 0; j < l.size(); ++j) {
      if (l[j] < 0) continue;
      r.state.pseudo_items.push_back(s.unlabeled_items[j]);
      r.state.pseudo_ids.push_back(s.pseudo_id_offset + l[j]);
    }
    r.report.iteration = r.state.iteration;
    ++calls;
    return r;
  }
};

SplitState toy_split() {
  SplitState s;
  s.labeled_items = {0, 1};
  s.labeled_ids = {0, 0};
  s.unlabeled_items = {2, 3, 4, 5};
  s.pseudo_id_offset = 10;
  return s;
}

}  // namespace

TEST_CASE("filter drops small clusters and relabels densely") {
  // Sizes 6, 3, 7 in that order of first appearance.
  std::vector<std::size_t> a;
  for (int i = 0; i < 6; ++i) a.push_back(0);
  for (int i = 0; i < 3; ++i) a.push_back(1);
  for (int i = 0; i < 7; ++i) a.push_back(2);
  const Partition p(a);
  const auto kept = filter_clusters(p, 5);
  CHECK(kept.items.size() == 13);
  CHECK(std::set<std::int64_t>(kept.identities.begin(), kept.identities.end()) ==
        std::set<std::int64_t>{0, 1});
  CHECK(kept.identities.front() == 0);
  CHECK(kept.identities.back() == 1);
  for (auto i : kept.items) CHECK(p[i] != 1);

  const auto all = filter_clusters(p, 1);
  CHECK(all.items.size() == 16);
  CHECK(Partition::from_labels(all.identities).same_clustering(p));

  CHECK(filter_clusters(Partition::singletons(5), 2).items.empty());
  CHECK_THROWS_AS(filter_clusters(p, 0), Error);
}

TEST_CASE("filtered clusters all reach the minimum size") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::int64_t> labels(40);
    for (auto& v : labels) v = static_cast<std::int64_t>(rng.below(12));
    const auto p = Partition::from_labels(labels);
    const std::size_t l = 1 + rng.below(6);
    const auto kept = filter_clusters(p, l);
    std::map<std::int64_t, std::size_t> sizes;
    for (auto id : kept.identities) ++sizes[id];
    for (auto [id, n] : sizes) CHECK(n >= l);
    CHECK(sizes.size() == static_cast<std::size_t>(
                              kept.identities.empty() ? 0 : 1 + *std::max_element(
                                  kept.identities.begin(), kept.identities.end())));
    std::size_t expected = 0;
    for (auto n : p.cluster_sizes()) expected += n >= l ? n : 0;
    CHECK(kept.items.size() == expected);
  }
}

TEST_CASE("loop runs the requested number of iterations") {
  Script script{{{0, 0, 1, 1}, {0, 1, 1, -1}, {0, 0, 1, 1}}};
  const auto r = run_pipeline_loop(toy_split(), 1, true, std::ref(script));
  CHECK(r.reports.size() == 1);
  CHECK_FALSE(r.converged);
}

TEST_CASE("loop stops once pseudo labels repeat") {
  // Labels differ between iterations 1 and 2, then repeat (up to renaming).
  Script script{{{0, 0, 1, 1}, {0, 1, 1, -1}, {1, 0, 0, -1}, {0, 0, 0, 0}}};
  const auto r = run_pipeline_loop(toy_split(), 5, true, std::ref(script));
  CHECK(r.reports.size() == 3);
  CHECK(r.converged);
  CHECK(r.final_state.iteration == 3);

  Script again{{{0, 0, 1, 1}, {0, 1, 1, -1}, {1, 0, 0, -1}, {0, 0, 0, 0}}};
  const auto full = run_pipeline_loop(toy_split(), 5, false, std::ref(again));
  CHECK(full.reports.size() == 5);
  CHECK(full.converged);
}

TEST_CASE("identical labels at iteration 1 do not count as convergence") {
  // Iteration 1 always starts from an empty pseudo set.
  Script script{{{-1, -1, -1, -1}}};
  const auto r = run_pipeline_loop(toy_split(), 3, true, std::ref(script));
  CHECK(r.reports.size() == 2);
  CHECK(r.converged);
}

TEST_CASE("zero-noise iteration yields clean pseudo labels") {
  Setup s = small_setup(0.0, 5);
  s.config.n_iterations = 1;
  s.config.cluster_config.distance_threshold = AgglomerativeConfig{}.distance_threshold;
  const auto r = run_pipeline(s.data, s.split, s.config);
  REQUIRE(r.reports.size() == 1);
  const auto& rep = r.reports[0];
  CHECK(rep.n_pseudo_labeled == rep.n_unlabeled);
  REQUIRE(rep.label_quality.precision.has_value());
  CHECK(rep.label_quality.precision.value() == 1.0);
  CHECK(rep.label_quality.recall.value() == 1.0);
  REQUIRE(rep.retrieval.has_value());
  CHECK(rep.retrieval->cmc_at.size() == 4);
}

TEST_CASE("pseudo ids never collide with real ids and are rebuilt each iteration") {
  Setup s = small_setup(0.2, 7);
  s.config.cluster_config.distance_threshold = 1.0;
  s.config.min_cluster_size = 3;
  SplitState state = s.split;
  const auto real = s.data.truth.distinct_identities();
  // Plant stale pseudo labels: the next iteration must discard them.
  state.pseudo_items = {state.unlabeled_items[0]};
  state.pseudo_ids = {state.pseudo_id_offset + 99};
  for (int it = 0; it < 2; ++it) {
    const auto r = run_iteration(state, s.data, s.config);
    CHECK(r.state.iteration == state.iteration + 1);
    for (auto id : r.state.pseudo_ids) {
      CHECK(id >= s.split.pseudo_id_offset);
      CHECK(std::find(real.begin(), real.end(), id) == real.end());
      CHECK(id < s.split.pseudo_id_offset + 99);
    }
    std::set<std::size_t> unl(state.unlabeled_items.begin(), state.unlabeled_items.end());
    for (auto i : r.state.pseudo_items) CHECK(unl.count(i) == 1);
    CHECK(r.state.labeled_items == state.labeled_items);
    CHECK(r.report.n_pseudo_labeled == r.state.pseudo_items.size());
    state = r.state;
  }
}

TEST_CASE("no unlabeled items means a purely supervised iteration") {
  Setup s = small_setup(0.2, 9);
  SplitState state = s.split;
  state.labeled_items.insert(state.labeled_items.end(), state.unlabeled_items.begin(),
                             state.unlabeled_items.end());
  const auto truth = s.data.truth.identities_by_item(s.data.features.rows());
  state.labeled_ids.clear();
  for (auto i : state.labeled_items) state.labeled_ids.push_back(truth[i]);
  state.unlabeled_items.clear();
  const auto r = run_iteration(state, s.data, s.config);
  CHECK(r.state.pseudo_items.empty());
  CHECK(r.report.n_pseudo_labeled == 0);
  CHECK(r.report.clusters_per_part.empty());
  CHECK_FALSE(r.report.label_quality.precision.has_value());
  CHECK(r.report.train_items == s.data.features.rows());
}

TEST_CASE("empty labeled set is rejected at iteration 1") {
  Setup s = small_setup(0.2, 9);
  SplitState state = s.split;
  state.unlabeled_items.insert(state.unlabeled_items.end(), state.labeled_items.begin(),
                               state.labeled_items.end());
  std::sort(state.unlabeled_items.begin(), state.unlabeled_items.end());
  state.labeled_items.clear();
  state.labeled_ids.clear();
  CHECK_THROWS_AS(run_iteration(state, s.data, s.config), Error);
}

TEST_CASE("strict agreement with filtering beats loose unfiltered pseudo labels") {
  double strict_total = 0.0, loose_total = 0.0;
  const int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    SynthConfig s;
    s.n_identities = 30;
    s.test_identities = 0;
    s.noise_sigma = 0.35;
    s.seed = static_cast<std::uint64_t>(seed);
    const SynthData d = generate(s);
    PipelineConfig c;
    c.agreement = 0;
    c.min_cluster_size = 2;
    const auto strict = pseudo_label_step(d.train.parts, c);
    c.agreement = 1;
    c.min_cluster_size = 1;
    const auto loose = pseudo_label_step(d.train.parts, c);
    const auto qs = pairwise_label_quality(strict.pseudo.items, strict.pseudo.identities,
                                           d.train.labels);
    const auto ql =
        pairwise_label_quality(loose.pseudo.items, loose.pseudo.identities, d.train.labels);
    REQUIRE(qs.precision.has_value());
    REQUIRE(ql.precision.has_value());
    strict_total += *qs.precision;
    loose_total += *ql.precision;
  }
  CHECK(strict_total / seeds > loose_total / seeds);
}

TEST_CASE("iterations are deterministic in the seed") {
  Setup s = small_setup(0.2, 11);
  const auto a = run_iteration(s.split, s.data, s.config);
  const auto b = run_iteration(s.split, s.data, s.config);
  CHECK(a.state.pseudo_items == b.state.pseudo_items);
  CHECK(a.state.pseudo_ids == b.state.pseudo_ids);
  CHECK(a.report.probe_loss_end == b.report.probe_loss_end);
  CHECK(a.report.retrieval->map == b.report.retrieval->map);
}

TEST_CASE("supervised baseline trains on labeled items only") {
  Setup s = small_setup(0.2, 13);
  SplitState with_pseudo = s.split;
  with_pseudo.pseudo_items = {s.split.unlabeled_items[0], s.split.unlabeled_items[1]};
  with_pseudo.pseudo_ids = {s.split.pseudo_id_offset, s.split.pseudo_id_offset};
  const auto a = supervised_baseline(s.data, s.split, s.config, 1);
  const auto b = supervised_baseline(s.data, with_pseudo, s.config, 1);
  CHECK(a.map == b.map);
  CHECK(a.cmc_at == b.cmc_at);
  PipelineData no_test = s.data;
  no_test.test_labels = LabelTable();
  CHECK_THROWS_AS(supervised_baseline(no_test, s.split, s.config, 1), Error);
}
