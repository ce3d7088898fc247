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

#include "partcons/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "partcons/error.hpp"
#include "partcons/parallel.hpp"

namespace partcons {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Lance-Williams state over slots. Ward works on squared distances, average
/// keeps unnormalized cross-pair sums so equal rational averages compare equal.
class LinkageState {
 public:
  LinkageState(CondensedMatrix initial, Linkage linkage)
      : linkage_(linkage), w_(std::move(initial)), size_(w_.size(), 1), active_(w_.size(), 1) {
    if (linkage_ == Linkage::kWard) {
      for (double& v : w_.values()) v *= v;
    }
  }

  std::size_t n() const noexcept { return w_.size(); }
  bool active(std::size_t i) const noexcept { return active_[i] != 0; }
  std::size_t size(std::size_t i) const noexcept { return size_[i]; }

  /// Comparison key; monotone in the reported distance.
  double key(std::size_t i, std::size_t j) const {
    const double v = w_(i, j);
    if (linkage_ == Linkage::kAverage) {
      return v / (static_cast<double>(size_[i]) * static_cast<double>(size_[j]));
    }
    return v;
  }

  double distance(std::size_t i, std::size_t j) const {
    const double k = key(i, j);
    return linkage_ == Linkage::kWard ? std::sqrt(k) : k;
  }

  /// Merges b into a.
  void merge(std::size_t a, std::size_t b) {
    const double na = static_cast<double>(size_[a]);
    const double nb = static_cast<double>(size_[b]);
    const double wab = w_(a, b);
    for (std::size_t k = 0; k < n(); ++k) {
      if (!active_[k] || k == a || k == b) continue;
      const double wak = w_(a, k);
      const double wbk = w_(b, k);
      double merged = 0.0;
      switch (linkage_) {
        case Linkage::kWard: {
          const double nk = static_cast<double>(size_[k]);
          merged = std::max(
              0.0, ((na + nk) * wak + (nb + nk) * wbk - nk * wab) / (na + nb + nk));
          break;
        }
        case Linkage::kAverage: merged = wak + wbk; break;
        case Linkage::kSingle: merged = std::min(wak, wbk); break;
      }
      w_.at(a, k) = merged;
    }
    size_[a] += size_[b];
    active_[b] = 0;
  }

 private:
  Linkage linkage_;
  CondensedMatrix w_;
  std::vector<std::size_t> size_;
  std::vector<char> active_;
};

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, std::string("non-finite ") + what);
  }
}

std::vector<Merge> greedy(LinkageState& s) {
  const std::size_t n = s.n();
  std::vector<std::size_t> nn(n, kNone);
  std::vector<double> nn_key(n, kInf);
  auto scan = [&](std::size_t i) {
    nn[i] = kNone;
    nn_key[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!s.active(j)) continue;
      const double k = s.key(i, j);
      if (nn[i] == kNone || k < nn_key[i]) {
        nn[i] = j;
        nn_key[i] = k;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) scan(i);

  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.active(i) || nn[i] == kNone) continue;
      if (a == kNone || nn_key[i] < nn_key[a]) a = i;
    }
    const std::size_t b = nn[a];
    merges.push_back({a, b, s.distance(a, b), s.size(a) + s.size(b)});
    s.merge(a, b);
    for (std::size_t i = 0; i < b; ++i) {
      if (!s.active(i)) continue;
      if (i == a) {
        scan(a);
      } else if (i < a) {
        if (nn[i] == a || nn[i] == b) {
          scan(i);
        } else {
          const double k = s.key(i, a);
          if (k < nn_key[i] || (k == nn_key[i] && a < nn[i])) {
            nn[i] = a;
            nn_key[i] = k;
          }
        }
      } else if (nn[i] == b) {
        scan(i);
      }
    }
  }
  return merges;
}

std::vector<Merge> nearest_neighbor_chain(LinkageState& s) {
  const std::size_t n = s.n();
  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (s.active(i)) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::size_t c = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : kNone;
    // Prefer the previous chain element on ties so the chain always closes.
    std::size_t best = prev;
    double best_key = prev == kNone ? kInf : s.key(c, prev);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == c || !s.active(j)) continue;
      const double k = s.key(c, j);
      if (best == kNone || k < best_key) {
        best = j;
        best_key = k;
      }
    }
    if (best == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t a = std::min(c, prev);
      const std::size_t b = std::max(c, prev);
      merges.push_back({a, b, s.distance(a, b), s.size(a) + s.size(b)});
      s.merge(a, b);
      --remaining;
    } else {
      chain.push_back(best);
    }
  }
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& x, const Merge& y) { return x.distance < y.distance; });
  return merges;
}

ClusteringResult run(CondensedMatrix initial, const AgglomerativeConfig& config) {
  config.validate();
  const std::size_t n = initial.size();
  LinkageState state(std::move(initial), config.linkage);
  ClusteringResult result;
  result.dendrogram.leaf_count = n;
  result.dendrogram.merges =
      config.order == MergeOrder::kGreedy ? greedy(state) : nearest_neighbor_chain(state);
  result.partition = cut_dendrogram(result.dendrogram, config.distance_threshold);
  return result;
}

}  // namespace

const char* linkage_name(Linkage linkage) noexcept {
  switch (linkage) {
    case Linkage::kWard: return "ward";
    case Linkage::kAverage: return "average";
    case Linkage::kSingle: return "single";
  }
  return "unknown";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "ward") return Linkage::kWard;
  if (name == "average") return Linkage::kAverage;
  if (name == "single") return Linkage::kSingle;
  fail(ErrorCode::kInvalidArgument,
       "unknown linkage '" + std::string(name) + "' (expected ward, average or single)");
}

void AgglomerativeConfig::validate() const {
  require(std::isfinite(distance_threshold) && distance_threshold > 0.0,
          "distance_threshold must be > 0");
}

CondensedMatrix euclidean_distances(const Matrix& points) {
  check_finite(points.data(), "coordinate in clustering input");
  const std::size_t n = points.rows();
  CondensedMatrix d(n);
  parallel_for(n, [&](std::size_t i) {
    auto pi = points.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto pj = points.row(j);
      double sq = 0.0;
      for (std::size_t c = 0; c < pi.size(); ++c) {
        const double diff = pi[c] - pj[c];
        sq += diff * diff;
      }
      d.at(i, j) = std::sqrt(sq);
    }
  });
  return d;
}

ClusteringResult agglomerate(const Matrix& points, const AgglomerativeConfig& config) {
  config.validate();
  return run(euclidean_distances(points), config);
}

ClusteringResult agglomerate_precomputed(CondensedMatrix dissimilarity,
                                         const AgglomerativeConfig& config) {
  check_finite(dissimilarity.values(), "dissimilarity");
  for (double v : dissimilarity.values()) {
    require(v >= 0.0, "dissimilarities must be non-negative");
  }
  return run(std::move(dissimilarity), config);
}

Partition cut_dendrogram(const Dendrogram& dendrogram, double threshold) {
  const std::size_t n = dendrogram.leaf_count;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const Merge& m : dendrogram.merges) {
    if (!(m.distance < threshold)) break;
    const std::size_t ra = find(m.cluster_a);
    const std::size_t rb = find(m.cluster_b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::int64_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<std::int64_t>(find(i));
  return Partition::from_labels(roots);
}

std::vector<Partition> cluster_parts(const PartEmbeddingTensor& tensor,
                                     const AgglomerativeConfig& config) {
  config.validate();
  std::vector<Partition> out(tensor.n_parts());
  parallel_for(tensor.n_parts(), [&](std::size_t q) {
    out[q] = agglomerate(tensor.part_matrix(q), config).partition;
  });
  return out;
}

}  // namespace partcons
