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

#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "partcons/rng.hpp"

namespace partcons::oracle {
namespace {

using Members = std::vector<std::vector<std::size_t>>;

std::vector<std::size_t> labels_from_members(const Members& live, std::size_t n) {
  std::vector<std::size_t> raw(n);
  for (std::size_t c = 0; c < live.size(); ++c) {
    for (auto i : live[c]) raw[i] = c;
  }
  std::map<std::size_t, std::size_t> dense;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = dense.try_emplace(raw[i], dense.size()).first->second;
  }
  return out;
}

template <class Linkage2>
NaiveClustering naive_run(std::size_t n, double threshold, Linkage2 linkage_of) {
  Members live;
  for (std::size_t i = 0; i < n; ++i) live.push_back({i});
  NaiveClustering out;
  bool cut = false;
  while (live.size() > 1) {
    std::size_t best_x = 0, best_y = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    // live stays sorted by smallest member, so (x, y) order is (a, b) order.
    for (std::size_t x = 0; x < live.size(); ++x) {
      for (std::size_t y = x + 1; y < live.size(); ++y) {
        const double v = linkage_of(live[x], live[y]);
        if (!found || v < best) {
          found = true;
          best = v;
          best_x = x;
          best_y = y;
        }
      }
    }
    if (!cut && !(best < threshold)) {
      out.assignment = labels_from_members(live, n);
      cut = true;
    }
    NaiveMerge m;
    m.a = live[best_x].front();
    m.b = live[best_y].front();
    m.distance = best;
    auto merged = live[best_x];
    merged.insert(merged.end(), live[best_y].begin(), live[best_y].end());
    std::sort(merged.begin(), merged.end());
    m.new_size = merged.size();
    out.merges.push_back(m);
    live[best_x] = std::move(merged);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(best_y));
  }
  if (!cut) out.assignment = labels_from_members(live, n);
  return out;
}

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

NaiveClustering naive_agglomerate(const Matrix& points, Linkage linkage, double threshold) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  auto centroid = [&](const std::vector<std::size_t>& c) {
    std::vector<double> m(dim, 0.0);
    for (auto i : c) {
      for (std::size_t k = 0; k < dim; ++k) m[k] += points(i, k);
    }
    for (double& v : m) v /= static_cast<double>(c.size());
    return m;
  };
  return naive_run(n, threshold, [&](const auto& x, const auto& y) {
    if (linkage == Linkage::kWard) {
      const auto cx = centroid(x);
      const auto cy = centroid(y);
      const double nx = static_cast<double>(x.size());
      const double ny = static_cast<double>(y.size());
      return std::sqrt(2.0 * nx * ny / (nx + ny)) * euclid(cx, cy);
    }
    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (auto i : x) {
      for (auto j : y) {
        const double d = euclid(points.row(i), points.row(j));
        best = std::min(best, d);
        total += d;
      }
    }
    if (linkage == Linkage::kSingle) return best;
    return total / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  });
}

NaiveClustering naive_agglomerate_matrix(const std::vector<double>& d, std::size_t n,
                                         Linkage linkage, double threshold) {
  return naive_run(n, threshold, [&](const auto& x, const auto& y) {
    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (auto i : x) {
      for (auto j : y) {
        best = std::min(best, d[i * n + j]);
        total += d[i * n + j];
      }
    }
    if (linkage == Linkage::kSingle) return best;
    return total / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  });
}

double naive_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::uint64_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

double naive_adjusted_rand_index(const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::uint64_t both = 0, in_a = 0, in_b = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      in_a += sa;
      in_b += sb;
      both += sa && sb;
    }
  }
  const double t = static_cast<double>(total);
  const double pa = static_cast<double>(in_a);
  const double pb = static_cast<double>(in_b);
  const double expected = pa * pb / t;
  const double maximum = 0.5 * (pa + pb);
  if (maximum - expected == 0.0) return 1.0;
  return (static_cast<double>(both) - expected) / (maximum - expected);
}

EvalReport naive_retrieval(const Matrix& query, const Matrix& gallery,
                           const RetrievalProtocol& protocol, std::size_t max_rank) {
  EvalReport report;
  report.cmc.assign(max_rank, 0.0);
  std::vector<std::size_t> first_hits;
  std::vector<double> aps;
  for (std::size_t qi = 0; qi < query.rows(); ++qi) {
    const auto qid = protocol.query.identities[qi];
    const auto qcam = protocol.query.cameras[qi];
    auto admissible = [&](std::size_t g) {
      return !(protocol.camera_filter && protocol.gallery.identities[g] == qid &&
               protocol.gallery.cameras[g] == qcam);
    };
    std::vector<double> dist(gallery.rows());
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      double s = 0.0;
      for (std::size_t k = 0; k < gallery.cols(); ++k) {
        const double diff = query(qi, k) - gallery(g, k);
        s += diff * diff;
      }
      dist[g] = s;
    }
    // rank_of[g] = number of admissible rows strictly ahead of g.
    std::vector<std::pair<std::size_t, bool>> by_rank;
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      if (!admissible(g)) continue;
      std::size_t ahead = 0;
      for (std::size_t h = 0; h < gallery.rows(); ++h) {
        if (h == g || !admissible(h)) continue;
        if (dist[h] < dist[g] || (dist[h] == dist[g] && h < g)) ++ahead;
      }
      by_rank.emplace_back(ahead, protocol.gallery.identities[g] == qid);
    }
    std::sort(by_rank.begin(), by_rank.end());
    std::size_t hits = 0;
    double ap = 0.0;
    std::size_t first = 0;
    for (const auto& [rank, correct] : by_rank) {
      if (!correct) continue;
      if (hits == 0) first = rank;
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
    if (hits == 0) {
      ++report.excluded_queries;
      continue;
    }
    first_hits.push_back(first);
    aps.push_back(ap / static_cast<double>(hits));
  }
  report.n_queries_used = first_hits.size();
  if (report.n_queries_used == 0) return report;
  const double used = static_cast<double>(report.n_queries_used);
  for (std::size_t r = 0; r < max_rank; ++r) {
    std::size_t count = 0;
    for (auto f : first_hits) count += f <= r;
    report.cmc[r] = static_cast<double>(count) / used;
  }
  double sum = 0.0;
  for (double ap : aps) sum += ap;
  report.map = sum / used;
  return report;
}

std::vector<SuiteResult> run_selftest(std::uint64_t seed, std::size_t cases_per_suite) {
  std::vector<SuiteResult> results;

  SuiteResult cl{"agglomerative clustering", 0, 0, {}};
  Rng rng(derive_seed(seed, "selftest-cluster"));
  const Linkage linkages[] = {Linkage::kWard, Linkage::kAverage, Linkage::kSingle};
  const double thresholds[] = {0.5, 1.0, 2.0, 4.0};
  for (std::size_t c = 0; c < cases_per_suite; ++c) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t dim = 1 + rng.below(8);
    Matrix pts(n, dim);
    for (double& v : pts.data()) v = rng.normal();
    AgglomerativeConfig cfg;
    cfg.linkage = linkages[c % 3];
    cfg.distance_threshold = thresholds[rng.below(4)];
    const auto got = agglomerate(pts, cfg);
    const auto want = naive_agglomerate(pts, cfg.linkage, cfg.distance_threshold);
    ++cl.cases;
    bool ok = got.partition.assignment() == want.assignment &&
              got.dendrogram.merges.size() == want.merges.size();
    for (std::size_t m = 0; ok && m < want.merges.size(); ++m) {
      const auto& g = got.dendrogram.merges[m];
      const auto& w = want.merges[m];
      ok = g.cluster_a == w.a && g.cluster_b == w.b && g.new_size == w.new_size &&
           std::abs(g.distance - w.distance) <= 1e-9 * std::max(1.0, w.distance);
    }
    if (!ok && cl.failures++ == 0) {
      cl.first_failure = "case " + std::to_string(c) + " (" + linkage_name(cfg.linkage) +
                         ", n=" + std::to_string(n) + ")";
    }
  }
  results.push_back(cl);

  SuiteResult ri{"rand indices", 0, 0, {}};
  Rng prng(derive_seed(seed, "selftest-rand"));
  for (std::size_t c = 0; c < cases_per_suite; ++c) {
    const std::size_t n = 2 + prng.below(29);
    std::vector<std::int64_t> a(n), b(n);
    const std::uint64_t ka = 1 + prng.below(n), kb = 1 + prng.below(n);
    for (auto& v : a) v = static_cast<std::int64_t>(prng.below(ka));
    for (auto& v : b) v = static_cast<std::int64_t>(prng.below(kb));
    const Partition pa = Partition::from_labels(a), pb = Partition::from_labels(b);
    ++ri.cases;
    const bool ok = rand_index(pa, pb) == naive_rand_index(pa.assignment(), pb.assignment()) &&
                    adjusted_rand_index(pa, pb) ==
                        naive_adjusted_rand_index(pa.assignment(), pb.assignment());
    if (!ok && ri.failures++ == 0) ri.first_failure = "case " + std::to_string(c);
  }
  results.push_back(ri);

  SuiteResult rt{"retrieval metrics", 0, 0, {}};
  Rng rrng(derive_seed(seed, "selftest-retrieval"));
  for (std::size_t c = 0; c < cases_per_suite; ++c) {
    const std::size_t nq = 1 + rrng.below(6), ng = 1 + rrng.below(20);
    const std::size_t dim = 1 + rrng.below(4);
    const std::uint64_t ids = 1 + rrng.below(4);
    Matrix q(nq, dim), g(ng, dim);
    // Small integer coordinates force distance ties.
    for (double& v : q.data()) v = static_cast<double>(rrng.below(3));
    for (double& v : g.data()) v = static_cast<double>(rrng.below(3));
    RetrievalProtocol p;
    p.camera_filter = rrng.below(2) == 0;
    for (std::size_t i = 0; i < nq; ++i) {
      p.query.identities.push_back(static_cast<std::int64_t>(rrng.below(ids)));
      p.query.cameras.push_back(static_cast<std::int64_t>(rrng.below(3)));
    }
    for (std::size_t i = 0; i < ng; ++i) {
      p.gallery.identities.push_back(static_cast<std::int64_t>(rrng.below(ids)));
      p.gallery.cameras.push_back(static_cast<std::int64_t>(rrng.below(3)));
    }
    const std::size_t max_rank = 1 + rrng.below(ng);
    const auto got = evaluate_retrieval(q, g, p, max_rank);
    const auto want = naive_retrieval(q, g, p, max_rank);
    ++rt.cases;
    const bool ok = got.cmc == want.cmc && got.map == want.map &&
                    got.n_queries_used == want.n_queries_used &&
                    got.excluded_queries == want.excluded_queries;
    if (!ok && rt.failures++ == 0) rt.first_failure = "case " + std::to_string(c);
  }
  results.push_back(rt);
  return results;
}

}  // namespace partcons::oracle
