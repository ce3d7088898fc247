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

#include "partcons/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>

#include "partcons/error.hpp"

namespace partcons {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::kShapeMismatch, "matrix data has " + std::to_string(data_.size()) +
                                        " values, expected " +
                                        std::to_string(rows_ * cols_));
  }
}

PetArray to_pet(const Matrix& m) { return {m.rows(), 1, m.cols(), m.data()}; }

Matrix to_matrix(const PetArray& a) {
  if (a.n_parts != 1) {
    fail(ErrorCode::kShapeMismatch,
         "expected a single-part array, got Q=" + std::to_string(a.n_parts));
  }
  return Matrix(a.n_items, a.dim, a.data);
}

PartEmbeddingTensor::PartEmbeddingTensor(std::size_t n_items, std::size_t n_parts,
                                         std::size_t dim, std::vector<double> data)
    : n_items_(n_items), n_parts_(n_parts), dim_(dim), data_(std::move(data)) {
  require(n_parts_ >= 1, "tensor needs at least one part");
  require(dim_ >= 1, "tensor needs dimension >= 1");
  if (data_.size() != n_items_ * n_parts_ * dim_) {
    fail(ErrorCode::kShapeMismatch,
         "tensor data has " + std::to_string(data_.size()) + " values, expected N*Q*d = " +
             std::to_string(n_items_ * n_parts_ * dim_));
  }
  for (std::size_t i = 0; i < n_items_; ++i) {
    for (std::size_t q = 0; q < n_parts_; ++q) {
      double sq = 0.0;
      for (double v : part(i, q)) {
        if (!std::isfinite(v)) {
          fail(ErrorCode::kNonFinite, "non-finite value at item " + std::to_string(i) +
                                          ", part " + std::to_string(q));
        }
        sq += v * v;
      }
      if (std::abs(std::sqrt(sq) - 1.0) > kUnitTolerance) {
        fail(ErrorCode::kNormalization,
             "part vector (item " + std::to_string(i) + ", part " + std::to_string(q) +
                 ") has norm " + std::to_string(std::sqrt(sq)) + ", expected 1");
      }
    }
  }
}

Matrix PartEmbeddingTensor::part_matrix(std::size_t q) const {
  require(q < n_parts_, "part index out of range");
  Matrix out(n_items_, dim_);
  for (std::size_t i = 0; i < n_items_; ++i) {
    auto src = part(i, q);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix concat_parts(const PartEmbeddingTensor& tensor) {
  // [item][part][component] storage already is the concatenation.
  return Matrix(tensor.n_items(), tensor.n_parts() * tensor.dim(), tensor.data());
}

LabelTable::LabelTable(std::vector<LabelRow> rows) : rows_(std::move(rows)) {
  std::set<std::size_t> seen;
  for (const auto& r : rows_) {
    if (!seen.insert(r.item).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate item " + std::to_string(r.item) +
                                            " in label table");
    }
    if (r.identity < 0 || r.camera < 0) {
      fail(ErrorCode::kInvalidArgument,
           "negative identity or camera for item " + std::to_string(r.item));
    }
  }
}

void LabelTable::check_items(std::size_t n_items) const {
  for (const auto& r : rows_) {
    if (r.item >= n_items) {
      fail(ErrorCode::kInvalidArgument, "label item " + std::to_string(r.item) +
                                            " out of range for " + std::to_string(n_items) +
                                            " items");
    }
  }
}

std::vector<std::int64_t> LabelTable::identities_by_item(std::size_t n_items) const {
  if (rows_.size() != n_items) {
    fail(ErrorCode::kShapeMismatch, "label table has " + std::to_string(rows_.size()) +
                                        " rows for " + std::to_string(n_items) + " items");
  }
  check_items(n_items);
  std::vector<std::int64_t> out(n_items);
  for (const auto& r : rows_) out[r.item] = r.identity;
  return out;
}

std::vector<std::int64_t> LabelTable::distinct_identities() const {
  std::set<std::int64_t> ids;
  for (const auto& r : rows_) ids.insert(r.identity);
  return {ids.begin(), ids.end()};
}

Partition::Partition(std::vector<std::size_t> assignment) : assignment_(std::move(assignment)) {
  if (assignment_.empty()) return;
  const std::size_t max_id = *std::max_element(assignment_.begin(), assignment_.end());
  std::vector<bool> used(max_id + 1, false);
  for (std::size_t c : assignment_) used[c] = true;
  for (std::size_t c = 0; c <= max_id; ++c) {
    if (!used[c]) {
      fail(ErrorCode::kInvalidArgument,
           "partition cluster ids must be dense; id " + std::to_string(c) + " is unused");
    }
  }
  n_clusters_ = max_id + 1;
}

Partition Partition::from_labels(std::span<const std::int64_t> labels) {
  std::unordered_map<std::int64_t, std::size_t> remap;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (std::int64_t l : labels) {
    auto [it, inserted] = remap.emplace(l, remap.size());
    out.push_back(it->second);
  }
  return Partition(std::move(out));
}

Partition Partition::singletons(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return Partition(std::move(out));
}

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(n_clusters_, 0);
  for (std::size_t c : assignment_) ++sizes[c];
  return sizes;
}

Partition Partition::canonical() const {
  std::vector<std::int64_t> labels(assignment_.begin(), assignment_.end());
  return from_labels(labels);
}

bool Partition::same_clustering(const Partition& other) const {
  return size() == other.size() && canonical().assignment_ == other.canonical().assignment_;
}

}  // namespace partcons
