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

#include "partcons/workflow.hpp"

#include "partcons/error.hpp"
#include "partcons/io.hpp"
#include "partcons/synth.hpp"

namespace partcons {

using nlohmann::json;

PreparedData prepare_data(const RunConfig& config) {
  config.validate();
  PreparedData out;
  PipelineData& d = out.data;
  if (!config.data.raw.empty()) {
    require(!config.data.labels.empty(), "data.labels is required with data.raw");
    require(config.data.test_raw.empty() == config.data.test_labels.empty(),
            "data.test_raw and data.test_labels go together");
    d.features = to_matrix(load_pet(config.data.raw));
    d.truth = load_labels(config.data.labels);
    if (!config.data.test_raw.empty()) {
      d.test_features = to_matrix(load_pet(config.data.test_raw));
      d.test_labels = load_labels(config.data.test_labels);
      d.test_labels.check_items(d.test_features.rows());
      require(d.test_features.cols() == d.features.cols(),
              "test features must have the training feature width");
    }
  } else {
    SynthData synth = generate(config.synth);
    d.features = std::move(synth.train.raw);
    d.truth = std::move(synth.train.labels);
    d.test_features = std::move(synth.test.raw);
    d.test_labels = std::move(synth.test.labels);
  }
  d.truth.check_items(d.features.rows());
  out.split = split_labeled(d.truth, config.labeled_fraction, derive_seed(config.seed, "split"));
  return out;
}

PipelineRun run_configured_pipeline(const RunConfig& config, bool with_baseline) {
  const PreparedData prepared = prepare_data(config);
  const std::string hash = config_hash(config);
  PipelineRun run;
  run.result = run_pipeline(prepared.data, prepared.split, config.pipeline);
  for (const auto& r : run.result.reports) {
    json line = to_json(r);
    line["config_hash"] = hash;
    run.reports_jsonl += line.dump() + "\n";
  }
  if (with_baseline && prepared.data.test_labels.size() > 0) {
    run.baseline = supervised_baseline(prepared.data, prepared.split, config.pipeline,
                                       run.result.reports.size());
  }

  const IterationReport& last = run.result.reports.back();
  json doc = {
      {"config_hash", hash},
      {"iterations_run", run.result.reports.size()},
      {"converged", run.result.converged},
      {"n_items", prepared.data.features.rows()},
      {"n_labeled", prepared.split.labeled_items.size()},
      {"n_unlabeled", prepared.split.unlabeled_items.size()},
      {"n_pseudo_labeled", last.n_pseudo_labeled},
      {"label_quality", to_json(last.label_quality)},
      {"retrieval", last.retrieval ? to_json(*last.retrieval) : json(nullptr)},
      {"baseline", run.baseline ? to_json(*run.baseline) : json(nullptr)},
  };
  run.final_json = dump_canonical(doc);
  return run;
}

}  // namespace partcons
