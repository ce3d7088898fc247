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

#include "partcons/synth.hpp"

#include <cmath>
#include <string>

#include "partcons/error.hpp"
#include "partcons/parallel.hpp"
#include "partcons/rng.hpp"

namespace partcons {
namespace {

void normalize(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
}

std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq < 1e-12);
  normalize(v);
  return v;
}

/// prototypes[i] = Q*d concatenated unit prototypes of identity i.
std::vector<std::vector<double>> draw_prototypes(const SynthConfig& c, std::size_t count,
                                                 std::string_view tag) {
  std::vector<std::vector<double>> protos(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(c.seed, tag, {i}));
    protos[i].reserve(c.n_parts * c.dim);
    for (std::size_t q = 0; q < c.n_parts; ++q) {
      const auto v = unit_vector(rng, c.dim);
      protos[i].insert(protos[i].end(), v.begin(), v.end());
    }
  }
  // Confusion is decided from the original prototypes, never from an
  // already-replaced one.
  auto confused = protos;
  if (count > 1 && c.part_confusion > 0.0) {
    for (std::size_t i = 0; i < count; ++i) {
      Rng rng(derive_seed(c.seed, std::string(tag) + "/confusion", {i}));
      for (std::size_t q = 0; q < c.n_parts; ++q) {
        if (rng.uniform() < c.part_confusion) {
          std::size_t j = rng.below(count - 1);
          if (j >= i) ++j;
          std::copy_n(protos[j].begin() + q * c.dim, c.dim,
                      confused[i].begin() + q * c.dim);
        }
      }
    }
  }
  return confused;
}

SynthSet render(const SynthConfig& c, const std::vector<std::vector<double>>& protos,
                const Matrix& lift, std::int64_t first_identity, std::string_view tag) {
  const std::size_t n = protos.size() * c.images_per_identity;
  const std::size_t row = c.n_parts * c.dim;
  const double part_std = synth_noise_std(c, c.dim);
  const double raw_std = synth_raw_noise_std(c);
  std::vector<double> parts(n * row);
  Matrix raw(n, c.raw_dim);
  std::vector<LabelRow> labels(n);
  parallel_for(protos.size(), [&](std::size_t id) {
    const auto& proto = protos[id];
    // Noiseless lift shared by every image of this identity.
    std::vector<double> lifted(c.raw_dim, 0.0);
    for (std::size_t r = 0; r < c.raw_dim; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < row; ++k) s += lift(r, k) * proto[k];
      lifted[r] = s;
    }
    for (std::size_t k = 0; k < c.images_per_identity; ++k) {
      const std::size_t item = id * c.images_per_identity + k;
      Rng rng(derive_seed(c.seed, std::string(tag) + "/image", {item}));
      double* dst = parts.data() + item * row;
      for (std::size_t j = 0; j < row; ++j) {
        dst[j] = proto[j] + (part_std > 0.0 ? part_std * rng.normal() : 0.0);
      }
      for (std::size_t q = 0; q < c.n_parts; ++q) normalize({dst + q * c.dim, c.dim});
      for (std::size_t r = 0; r < c.raw_dim; ++r) {
        raw(item, r) = lifted[r] + (raw_std > 0.0 ? raw_std * rng.normal() : 0.0);
      }
      labels[item] = {item, first_identity + static_cast<std::int64_t>(id),
                      static_cast<std::int64_t>(item % kSynthCameras)};
    }
  });
  return {PartEmbeddingTensor(n, c.n_parts, c.dim, std::move(parts)),
          LabelTable(std::move(labels)), std::move(raw)};
}

}  // namespace

void SynthConfig::validate() const {
  require(n_identities >= 1, "synth: n_identities must be >= 1");
  require(images_per_identity >= 1, "synth: images_per_identity must be >= 1");
  require(n_parts >= 1, "synth: n_parts must be >= 1");
  require(dim >= 1, "synth: dim must be >= 1");
  require(raw_dim >= 1, "synth: raw_dim must be >= 1");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0,
          "synth: noise_sigma must be >= 0");
  require(std::isfinite(raw_noise_scale) && raw_noise_scale >= 0.0,
          "synth: raw_noise_scale must be >= 0");
  require(part_confusion >= 0.0 && part_confusion <= 1.0,
          "synth: part_confusion must lie in [0, 1]");
}

double synth_noise_std(const SynthConfig& config, std::size_t dimension) {
  return config.noise_sigma * std::sqrt(3.0 / static_cast<double>(dimension));
}

double synth_raw_noise_std(const SynthConfig& config) {
  const double columns = static_cast<double>(config.raw_dim) /
                         static_cast<double>(config.n_parts * config.dim);
  return synth_noise_std(config, config.dim) * std::sqrt(columns) * config.raw_noise_scale;
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  const std::size_t row = config.n_parts * config.dim;
  Matrix lift(config.raw_dim, row);
  {
    Rng rng(derive_seed(config.seed, "lift"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(row));
    for (double& v : lift.data()) v = scale * rng.normal();
  }
  SynthData out;
  out.train = render(config, draw_prototypes(config, config.n_identities, "train"), lift, 0,
                     "train");
  if (config.test_identities > 0) {
    out.test = render(config, draw_prototypes(config, config.test_identities, "test"), lift,
                      static_cast<std::int64_t>(config.n_identities), "test");
  } else {
    out.test = {PartEmbeddingTensor(0, config.n_parts, config.dim, {}), LabelTable{},
                Matrix(0, config.raw_dim)};
  }
  return out;
}

}  // namespace partcons
