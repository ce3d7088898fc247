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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "partcons/embedder.hpp"
#include "partcons/losses.hpp"
#include "partcons/rng.hpp"
#include "partcons/types.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("partcons-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> random_unit_parts(std::size_t n, std::size_t q, std::size_t d,
                                             partcons::Rng& rng) {
  std::vector<double> data(n * q * d);
  for (std::size_t v = 0; v < n * q; ++v) {
    double sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      data[v * d + c] = rng.normal();
      sq += data[v * d + c] * data[v * d + c];
    }
    for (std::size_t c = 0; c < d; ++c) data[v * d + c] /= std::sqrt(sq);
  }
  return data;
}

inline partcons::PartEmbeddingTensor random_tensor(std::size_t n, std::size_t q, std::size_t d,
                                                   std::uint64_t seed) {
  partcons::Rng rng(seed);
  return partcons::PartEmbeddingTensor(n, q, d, random_unit_parts(n, q, d, rng));
}

/// Central difference of f at x along coordinate k.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t k, double eps = 1e-5) {
  const double x0 = x[k];
  x[k] = x0 + eps;
  const double up = f(x);
  x[k] = x0 - eps;
  const double down = f(x);
  return (up - down) / (2.0 * eps);
}

/// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero entries from
/// dominating with pure rounding noise.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// P identities x K instances of random unit parts, labels 0..P-1, keys 10*row+3.
inline partcons::EmbeddingBatch random_batch(std::size_t p, std::size_t k, std::size_t q,
                                             std::size_t d, partcons::Rng& rng) {
  partcons::EmbeddingBatch batch;
  batch.n_parts = q;
  batch.dim = d;
  batch.data = random_unit_parts(p * k, q, d, rng);
  for (std::size_t i = 0; i < p * k; ++i) {
    batch.labels.push_back(static_cast<std::int64_t>(i / k));
    batch.keys.push_back(10 * i + 3);
  }
  return batch;
}

/// Smallest gap between a selected hardest positive or (mixed) negative and
/// its runner-up, or between a hinge argument and zero. Finite differences of
/// size eps are only meaningful when this is much larger than eps.
inline double selection_gap(const partcons::EmbeddingBatch& batch, double margin,
                            const partcons::MixSpec* mix) {
  using partcons::pairwise_distance;
  const std::size_t b = batch.size();
  double gap = std::numeric_limits<double>::infinity();
  auto spread = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    if (v.size() >= 2) gap = std::min(gap, v[1] - v[0]);
    return v.front();
  };
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> pos, neg;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      const double dij = pairwise_distance(batch.row(i), batch.row(j), batch.n_parts, batch.dim);
      if (batch.labels[j] == batch.labels[i]) {
        pos.push_back(-dij);
      } else if (mix == nullptr) {
        neg.push_back(dij);
      } else {
        const auto set = partcons::replace_set(*mix, batch.n_parts, batch.key(i), batch.key(j));
        const auto mixed =
            partcons::mix_parts(batch.row(i), batch.row(j), set, batch.n_parts, batch.dim);
        neg.push_back(pairwise_distance(batch.row(i), mixed, batch.n_parts, batch.dim));
      }
    }
    const double hardest_pos = -spread(pos);
    const double hardest_neg = spread(neg);
    gap = std::min(gap, std::abs(margin + hardest_pos - hardest_neg));
  }
  return gap;
}

/// Largest relative error between an analytic gradient and central
/// differences of f, over all coordinates.
inline double max_gradient_error(const std::function<double(const std::vector<double>&)>& f,
                                 const std::vector<double>& x,
                                 const std::vector<double>& analytic, double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    worst = std::max(worst, relative_error(analytic[k], central_difference(f, x, k, eps)));
  }
  return worst;
}

inline partcons::Matrix random_features(std::size_t n, std::size_t raw, partcons::Rng& rng) {
  partcons::Matrix m(n, raw);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

// Flattens every trainable value, embedder first, then the head.
inline std::vector<double> flatten(const partcons::EmbedderParams& p,
                                   const partcons::Classifier& c) {
  std::vector<double> out;
  for (std::size_t q = 0; q < p.n_parts; ++q) {
    out.insert(out.end(), p.weights[q].data().begin(), p.weights[q].data().end());
    out.insert(out.end(), p.biases[q].begin(), p.biases[q].end());
  }
  out.insert(out.end(), c.weight.data().begin(), c.weight.data().end());
  out.insert(out.end(), c.bias.begin(), c.bias.end());
  return out;
}

inline void unflatten(const std::vector<double>& x, partcons::EmbedderParams& p,
                      partcons::Classifier& c) {
  std::size_t at = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
    at += dst.size();
  };
  for (std::size_t q = 0; q < p.n_parts; ++q) {
    take(p.weights[q].data());
    take(p.biases[q]);
  }
  take(c.weight.data());
  take(c.bias);
}

inline std::vector<double> flatten(const partcons::Gradients& g) {
  std::vector<double> out;
  for (std::size_t q = 0; q < g.weights.size(); ++q) {
    out.insert(out.end(), g.weights[q].data().begin(), g.weights[q].data().end());
    out.insert(out.end(), g.biases[q].begin(), g.biases[q].end());
  }
  out.insert(out.end(), g.classifier_weight.data().begin(), g.classifier_weight.data().end());
  out.insert(out.end(), g.classifier_bias.begin(), g.classifier_bias.end());
  return out;
}

}  // namespace testing
