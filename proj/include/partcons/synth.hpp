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
#include <vector>

#include "partcons/types.hpp"

namespace partcons {

inline constexpr std::size_t kSynthCameras = 6;

struct SynthConfig {
  std::size_t n_identities = 50;
  std::size_t images_per_identity = 6;
  std::size_t n_parts = 6;
  std::size_t dim = 16;
  /// Noise scale. Each part (and each raw feature vector) receives isotropic
  /// Gaussian noise with per-component std noise_sigma * sqrt(3 / dim), so the
  /// expected noise norm is sqrt(3) * noise_sigma whatever the dimension.
  double noise_sigma = 0.35;
  /// Probability that an identity's part prototype is replaced by the same
  /// part's prototype of another identity.
  double part_confusion = 0.15;
  std::size_t raw_dim = 192;
  /// Raw-feature noise relative to the calibrated level. At 1 the best linear
  /// read-out of one part from the raw features (least squares through the
  /// lift) carries the same noise as that part in the tensor; see
  /// synth_raw_noise_std. Zero whenever noise_sigma is zero.
  double raw_noise_scale = 1.0;
  /// Held-out identities generated with the same raw-feature lift, for
  /// query/gallery evaluation. Zero disables the held-out set.
  std::size_t test_identities = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSet {
  PartEmbeddingTensor parts;
  LabelTable labels;
  Matrix raw;  // N x raw_dim
};

struct SynthData {
  SynthSet train;
  SynthSet test;  // empty when test_identities == 0
};

/// Per-component noise standard deviation implied by a config.
double synth_noise_std(const SynthConfig& config, std::size_t dimension);

/// Per-component raw noise std: part std * sqrt(raw_dim / (Q d)) * scale.
/// The lift has entries N(0, 1 / (Q d)), so its columns have squared norm
/// raw_dim / (Q d) and least-squares recovery divides the noise by that root.
double synth_raw_noise_std(const SynthConfig& config);

/// Deterministic in config (including seed). Items are grouped by identity:
/// item i*images_per_identity + k is image k of identity i. Test identities
/// are numbered after the training identities.
SynthData generate(const SynthConfig& config);

}  // namespace partcons
