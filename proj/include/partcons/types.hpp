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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace partcons {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Generic [item][part][component] array with no norm constraint. Raw feature
/// files and checkpoint blocks use this shape (n_parts = 1 for matrices).
struct PetArray {
  std::size_t n_items = 0;
  std::size_t n_parts = 1;
  std::size_t dim = 1;
  std::vector<double> data;

  bool operator==(const PetArray&) const = default;
};

PetArray to_pet(const Matrix& m);
Matrix to_matrix(const PetArray& a);  // requires n_parts == 1

/// N items x Q parts x d components; every part vector has unit L2 norm
/// (within kUnitTolerance). Immutable after construction.
class PartEmbeddingTensor {
 public:
  static constexpr double kUnitTolerance = 1e-6;

  PartEmbeddingTensor() = default;
  PartEmbeddingTensor(std::size_t n_items, std::size_t n_parts, std::size_t dim,
                      std::vector<double> data);
  explicit PartEmbeddingTensor(PetArray array)
      : PartEmbeddingTensor(array.n_items, array.n_parts, array.dim,
                            std::move(array.data)) {}

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_parts() const noexcept { return n_parts_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> part(std::size_t item, std::size_t q) const {
    return {data_.data() + (item * n_parts_ + q) * dim_, dim_};
  }
  /// All Q parts of one item, in part order.
  std::span<const double> item(std::size_t i) const {
    return {data_.data() + i * n_parts_ * dim_, n_parts_ * dim_};
  }
  const std::vector<double>& data() const noexcept { return data_; }

  /// N x d slice of part q.
  Matrix part_matrix(std::size_t q) const;
  PetArray as_array() const { return {n_items_, n_parts_, dim_, data_}; }

  bool operator==(const PartEmbeddingTensor&) const = default;

 private:
  std::size_t n_items_ = 0;
  std::size_t n_parts_ = 1;
  std::size_t dim_ = 1;
  std::vector<double> data_;
};

/// Row i = h^1_i || h^2_i || ... || h^Q_i.
Matrix concat_parts(const PartEmbeddingTensor& tensor);

struct LabelRow {
  std::size_t item = 0;
  std::int64_t identity = 0;
  std::int64_t camera = 0;

  bool operator==(const LabelRow&) const = default;
};

/// Identity and camera per item. Item indices are unique; ids non-negative.
class LabelTable {
 public:
  LabelTable() = default;
  explicit LabelTable(std::vector<LabelRow> rows);

  const std::vector<LabelRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  /// Checks every item index is < n_items.
  void check_items(std::size_t n_items) const;
  /// identity per item index; requires the table to cover 0..n-1 exactly.
  std::vector<std::int64_t> identities_by_item(std::size_t n_items) const;
  std::vector<std::int64_t> distinct_identities() const;

  bool operator==(const LabelTable&) const = default;

 private:
  std::vector<LabelRow> rows_;
};

/// Disjoint covering cluster assignment with dense ids 0..n_clusters-1.
class Partition {
 public:
  Partition() = default;
  /// Validates that ids are exactly 0..max with no gaps.
  explicit Partition(std::vector<std::size_t> assignment);

  /// Relabels arbitrary ids densely in order of first appearance.
  static Partition from_labels(std::span<const std::int64_t> labels);
  static Partition singletons(std::size_t n);

  std::size_t size() const noexcept { return assignment_.size(); }
  std::size_t n_clusters() const noexcept { return n_clusters_; }
  std::size_t operator[](std::size_t i) const { return assignment_[i]; }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }
  std::vector<std::size_t> cluster_sizes() const;

  /// Equality up to relabeling of cluster ids.
  bool same_clustering(const Partition& other) const;
  Partition canonical() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<std::size_t> assignment_;
  std::size_t n_clusters_ = 0;
};

}  // namespace partcons
