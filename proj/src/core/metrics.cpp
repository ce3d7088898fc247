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

#include "partcons/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "partcons/error.hpp"
#include "partcons/parallel.hpp"

namespace partcons {
namespace {

struct QueryOutcome {
  bool used = false;
  std::size_t first_hit = 0;  // 0-based rank of the first correct match
  double ap = 0.0;
};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

// n choose 2 as an exact double for counts well below 2^26.
double pairs(std::uint64_t n) { return static_cast<double>(n * (n - (n > 0 ? 1 : 0)) / 2); }

struct PairCounts {
  double same_both = 0.0;   // sum over contingency cells of C(n_ij, 2)
  double same_pred = 0.0;   // sum over pred clusters of C(a_i, 2)
  double same_truth = 0.0;  // sum over truth clusters of C(b_j, 2)
  double total = 0.0;
};

PairCounts pair_counts(const Partition& pred, const Partition& truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorCode::kShapeMismatch, "partitions cover " + std::to_string(pred.size()) +
                                        " and " + std::to_string(truth.size()) + " items");
  }
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells;
  std::vector<std::uint64_t> a(pred.n_clusters(), 0), b(truth.n_clusters(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++cells[{pred[i], truth[i]}];
    ++a[pred[i]];
    ++b[truth[i]];
  }
  PairCounts c;
  for (const auto& cell : cells) c.same_both += pairs(cell.second);
  for (auto n : a) c.same_pred += pairs(n);
  for (auto n : b) c.same_truth += pairs(n);
  c.total = pairs(pred.size());
  return c;
}

}  // namespace

EvalReport evaluate_retrieval(const Matrix& query, const Matrix& gallery,
                              const RetrievalProtocol& protocol, std::size_t max_rank) {
  require(max_rank >= 1, "max_rank must be >= 1");
  if (gallery.rows() == 0) fail(ErrorCode::kInvalidArgument, "gallery is empty");
  if (query.rows() > 0 && query.cols() != gallery.cols()) {
    fail(ErrorCode::kShapeMismatch, "query rows have " + std::to_string(query.cols()) +
                                        " columns, gallery rows " +
                                        std::to_string(gallery.cols()));
  }
  const auto& qs = protocol.query;
  const auto& gs = protocol.gallery;
  require(qs.identities.size() == query.rows() && qs.cameras.size() == query.rows(),
          "query metadata must have one entry per query row");
  require(gs.identities.size() == gallery.rows() && gs.cameras.size() == gallery.rows(),
          "gallery metadata must have one entry per gallery row");

  std::vector<QueryOutcome> outcomes(query.rows());
  parallel_for(query.rows(), [&](std::size_t qi) {
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(gallery.rows());
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      const bool same_id = gs.identities[g] == qs.identities[qi];
      if (protocol.camera_filter && same_id && gs.cameras[g] == qs.cameras[qi]) continue;
      ranked.emplace_back(squared_distance(query.row(qi), gallery.row(g)), g);
    }
    std::sort(ranked.begin(), ranked.end());
    QueryOutcome& out = outcomes[qi];
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (gs.identities[ranked[r].second] != qs.identities[qi]) continue;
      if (hits == 0) out.first_hit = r;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    if (hits > 0) {
      out.used = true;
      out.ap = precision_sum / static_cast<double>(hits);
    }
  });

  EvalReport report;
  report.cmc.assign(max_rank, 0.0);
  std::vector<std::size_t> hit_at(max_rank, 0);
  double ap_sum = 0.0;
  for (const auto& out : outcomes) {
    if (!out.used) {
      ++report.excluded_queries;
      continue;
    }
    ++report.n_queries_used;
    ap_sum += out.ap;
    if (out.first_hit < max_rank) ++hit_at[out.first_hit];
  }
  if (report.n_queries_used > 0) {
    const double used = static_cast<double>(report.n_queries_used);
    std::size_t cumulative = 0;
    for (std::size_t r = 0; r < max_rank; ++r) {
      cumulative += hit_at[r];
      report.cmc[r] = static_cast<double>(cumulative) / used;
    }
    report.map = ap_sum / used;
  }
  return report;
}

double rand_index(const Partition& pred, const Partition& truth) {
  const PairCounts c = pair_counts(pred, truth);
  if (c.total == 0.0) return 1.0;
  // agreeing = pairs together in both + pairs apart in both
  const double apart_both = c.total - c.same_pred - c.same_truth + c.same_both;
  return (c.same_both + apart_both) / c.total;
}

double adjusted_rand_index(const Partition& pred, const Partition& truth) {
  const PairCounts c = pair_counts(pred, truth);
  if (c.total == 0.0) return 1.0;
  const double expected = c.same_pred * c.same_truth / c.total;
  const double maximum = 0.5 * (c.same_pred + c.same_truth);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;
  return (c.same_both - expected) / denom;
}

LabelQuality pairwise_label_quality(std::span<const std::size_t> items,
                                    std::span<const std::int64_t> pseudo_labels,
                                    const LabelTable& truth) {
  require(items.size() == pseudo_labels.size(), "one pseudo label per item");
  LabelQuality q;
  if (items.empty()) return q;
  std::map<std::size_t, std::int64_t> truth_of;
  for (const auto& row : truth.rows()) truth_of.emplace(row.item, row.identity);
  std::vector<std::int64_t> true_ids;
  true_ids.reserve(items.size());
  for (auto item : items) {
    auto it = truth_of.find(item);
    if (it == truth_of.end()) {
      fail(ErrorCode::kInvalidArgument,
           "pseudo-labeled item " + std::to_string(item) + " is not in the label table");
    }
    true_ids.push_back(it->second);
  }
  const Partition pred = Partition::from_labels(pseudo_labels);
  const Partition gold = Partition::from_labels(true_ids);
  const PairCounts c = pair_counts(pred, gold);
  if (c.same_pred > 0.0) q.precision = c.same_both / c.same_pred;
  if (c.same_truth > 0.0) q.recall = c.same_both / c.same_truth;
  return q;
}

}  // namespace partcons
