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

#include <optional>
#include <string>

#include "partcons/config.hpp"
#include "partcons/pipeline.hpp"

namespace partcons {

/// Training data, held-out test set and the initial split for one run.
struct PreparedData {
  PipelineData data;
  SplitState split;
};

/// Loads the files named in config.data, or generates the synthetic
/// benchmark when no raw-feature path is given. The split seed derives from
/// the master seed.
PreparedData prepare_data(const RunConfig& config);

struct PipelineRun {
  PipelineResult result;
  std::optional<RetrievalSummary> baseline;
  std::string reports_jsonl;  // one canonical JSON object per iteration
  std::string final_json;
};

/// Full pseudo-labeling loop. With `with_baseline` the supervised-only model
/// (pseudo labels ignored, last iteration's seed) is trained and evaluated
/// too. Report bytes depend only on the config.
PipelineRun run_configured_pipeline(const RunConfig& config, bool with_baseline);

}  // namespace partcons
