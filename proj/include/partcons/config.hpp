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

#include <cstdint>
#include <string>

#include <json.hpp>

#include "partcons/metrics.hpp"
#include "partcons/pipeline.hpp"
#include "partcons/synth.hpp"

namespace partcons {

/// Optional input files; empty strings mean "generate synthetic data".
struct DataPaths {
  std::string raw;
  std::string labels;
  std::string test_raw;
  std::string test_labels;
};

/// Everything a batch run needs. Sub-seeds derive from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  SynthConfig synth;
  double labeled_fraction = 1.0 / 3.0;
  PipelineConfig pipeline;
  DataPaths data;

  /// Pushes the master seed into every component config.
  void apply_seed(std::uint64_t new_seed);
  void validate() const;
};

/// Parses a JSON document; absent keys keep their defaults, unknown keys are
/// rejected with their path. Trainer shape keys default to the synth shape.
RunConfig parse_run_config(const std::string& text);
RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& config);
/// Canonical serialization (sorted keys, two-space indent).
std::string resolved_config_text(const RunConfig& config);
/// 16 hex digits of FNV-1a 64 over resolved_config_text.
/// FNV-1a of the resolved config without output_dir.
std::string config_hash(const RunConfig& config);
std::string fnv1a_hex(const std::string& bytes);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const RetrievalSummary& summary);
nlohmann::json to_json(const LabelQuality& quality);
nlohmann::json to_json(const IterationReport& report);

/// Two-space indented dump with a trailing newline.
std::string dump_canonical(const nlohmann::json& document);

}  // namespace partcons
