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

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "partcons/error.hpp"
#include "partcons/io.hpp"
#include "partcons/log.hpp"

using namespace partcons;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a partcons::Error");
  return ErrorCode::kInvalidArgument;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string pet_header(const char* magic, std::uint32_t version, std::uint32_t n,
                       std::uint32_t q, std::uint32_t d) {
  std::string s(magic, 4);
  for (std::uint32_t v : {version, n, q, d}) {
    for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  return s;
}

std::string floats(const std::vector<float>& values) {
  std::string s;
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return s;
}

std::vector<double> float_rounded(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(static_cast<double>(static_cast<float>(x)));
  return out;
}

}  // namespace

TEST_CASE("tensor round trip keeps float32 payload bytes") {
  testing::TempDir dir("io");
  const auto t = testing::random_tensor(4, 3, 2, 11);
  save_tensor(t, dir / "t.pet");
  const auto back = load_tensor(dir / "t.pet");
  CHECK(back.n_items() == 4);
  CHECK(back.n_parts() == 3);
  CHECK(back.dim() == 2);
  CHECK(back.data() == float_rounded(t.data()));
  save_tensor(back, dir / "t2.pet");
  CHECK(read_text_file(dir / "t.pet") == read_text_file(dir / "t2.pet"));
  CHECK(load_tensor(dir / "t2.pet") == back);
}

TEST_CASE("round trip property over random shapes") {
  testing::TempDir dir("io-prop");
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = rng.below(8), q = 1 + rng.below(4), d = 1 + rng.below(9);
    const auto t = testing::random_tensor(n, q, d, 100 + static_cast<std::uint64_t>(trial));
    save_tensor(t, dir / "p.pet");
    const auto once = load_tensor(dir / "p.pet");
    save_tensor(once, dir / "p.pet");
    CHECK(load_tensor(dir / "p.pet") == once);
    CHECK(once.data() == float_rounded(t.data()));
  }
}

TEST_CASE("empty tensor keeps its shape") {
  testing::TempDir dir("io-empty");
  PartEmbeddingTensor t(0, 6, 8, {});
  save_tensor(t, dir / "e.pet");
  const auto back = load_tensor(dir / "e.pet");
  CHECK(back.n_items() == 0);
  CHECK(back.n_parts() == 6);
  CHECK(back.dim() == 8);
}

TEST_CASE("non-normalized parts are rejected") {
  CHECK(code_of([] { PartEmbeddingTensor(1, 1, 2, {1.0, 1.0}); }) ==
        ErrorCode::kNormalization);
  CHECK(code_of([] { PartEmbeddingTensor(1, 1, 2, {1.0}); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([] { PartEmbeddingTensor(1, 1, 1, {std::nan("")}); }) ==
        ErrorCode::kNonFinite);
}

TEST_CASE("loader format errors are typed") {
  testing::TempDir dir("io-bad");
  const std::vector<float> unit8 = {1, 0, 0, 1, 0.6f, 0.8f, -1, 0};
  write_bytes(dir / "ok.pet", pet_header("PETB", 1, 2, 2, 2) + floats(unit8));
  const auto ok = load_tensor(dir / "ok.pet");
  CHECK(ok.n_items() == 2);
  CHECK(ok.n_parts() == 2);
  CHECK(ok.dim() == 2);

  write_bytes(dir / "magic.pet", pet_header("XXXX", 1, 2, 2, 2) + floats(unit8));
  CHECK(code_of([&] { load_tensor(dir / "magic.pet"); }) == ErrorCode::kBadMagic);

  write_bytes(dir / "ver.pet", pet_header("PETB", 2, 2, 2, 2) + floats(unit8));
  CHECK(code_of([&] { load_tensor(dir / "ver.pet"); }) == ErrorCode::kBadVersion);

  std::vector<float> five(5 * 2, 0.0f);
  for (std::size_t i = 0; i < five.size(); i += 2) five[i] = 1.0f;
  write_bytes(dir / "trunc.pet", pet_header("PETB", 1, 10, 1, 2) + floats(five));
  CHECK(code_of([&] { load_tensor(dir / "trunc.pet"); }) == ErrorCode::kTruncated);

  write_bytes(dir / "short.pet", std::string("PETB\x01\x00", 6));
  CHECK(code_of([&] { load_tensor(dir / "short.pet"); }) == ErrorCode::kTruncated);

  write_bytes(dir / "zero.pet", pet_header("PETB", 1, 1, 0, 2));
  CHECK(code_of([&] { load_tensor(dir / "zero.pet"); }) == ErrorCode::kMalformed);

  write_bytes(dir / "extra.pet", pet_header("PETB", 1, 2, 2, 2) + floats(unit8) + "x");
  CHECK(code_of([&] { load_tensor(dir / "extra.pet"); }) == ErrorCode::kMalformed);

  CHECK(code_of([&] { load_tensor(dir / "missing.pet"); }) == ErrorCode::kIo);
}

TEST_CASE("small drift is re-normalized and logged, large drift fails") {
  testing::TempDir dir("io-drift");
  std::vector<std::string> messages;
  set_log_sink([&](LogLevel, const std::string& m) { messages.push_back(m); });
  const float s = 1.0f + 5e-5f;
  write_bytes(dir / "drift.pet", pet_header("PETB", 1, 1, 1, 2) + floats({s, 0.0f}));
  const auto t = load_tensor(dir / "drift.pet");
  CHECK(t.part(0, 0)[0] == 1.0);
  CHECK(messages.size() == 1);
  write_bytes(dir / "far.pet", pet_header("PETB", 1, 1, 1, 2) + floats({1.01f, 0.0f}));
  CHECK(code_of([&] { load_tensor(dir / "far.pet"); }) == ErrorCode::kNormalization);
  set_log_sink(nullptr);
}

TEST_CASE("concat_parts") {
  PartEmbeddingTensor t(1, 2, 2, {1, 0, 0, 1});
  const Matrix m = concat_parts(t);
  CHECK(m.rows() == 1);
  CHECK(m.cols() == 4);
  CHECK(m.data() == std::vector<double>{1, 0, 0, 1});

  const auto single = testing::random_tensor(5, 1, 3, 2);
  CHECK(concat_parts(single) == single.part_matrix(0));

  const auto r = testing::random_tensor(5, 3, 4, 3);
  const Matrix c = concat_parts(r);
  for (std::size_t i = 0; i < 5; ++i) {
    double sq = 0.0;
    for (double v : c.row(i)) sq += v * v;
    CHECK(std::sqrt(sq) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
    for (std::size_t q = 0; q < 3; ++q) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(c(i, q * 4 + k) == r.part(i, q)[k]);
    }
  }
}

TEST_CASE("label tables and partitions") {
  testing::TempDir dir("io-csv");
  LabelTable labels({{0, 3, 0}, {1, 3, 1}, {2, 7, 2}});
  save_labels(labels, dir / "l.csv");
  CHECK(read_text_file(dir / "l.csv") == "item,identity,camera\n0,3,0\n1,3,1\n2,7,2\n");
  CHECK(load_labels(dir / "l.csv") == labels);
  CHECK(labels.distinct_identities() == std::vector<std::int64_t>{3, 7});

  CHECK_THROWS_AS(LabelTable({{0, 1, 0}, {0, 2, 0}}), Error);
  CHECK_THROWS_AS(LabelTable({{0, -1, 0}}), Error);
  CHECK_THROWS_AS(labels.check_items(2), Error);

  Partition p({0, 1, 0, 2});
  save_partition(p, dir / "p.csv");
  CHECK(read_text_file(dir / "p.csv") == "item,cluster\n0,0\n1,1\n2,0\n3,2\n");
  CHECK(load_partition(dir / "p.csv") == p);
  CHECK(p.n_clusters() == 3);
  CHECK(p.cluster_sizes() == std::vector<std::size_t>{2, 1, 1});
  CHECK_THROWS_AS(Partition({0, 2}), Error);

  write_text_file(dir / "bad.csv", "item,cluster\n0,x\n");
  CHECK(code_of([&] { load_partition(dir / "bad.csv"); }) == ErrorCode::kMalformed);
  write_text_file(dir / "hdr.csv", "item,label\n0,0\n");
  CHECK(code_of([&] { load_partition(dir / "hdr.csv"); }) == ErrorCode::kMalformed);

  const std::vector<std::int64_t> raw = {5, 9, 5, 2};
  const auto rel = Partition::from_labels(raw);
  CHECK(rel.assignment() == std::vector<std::size_t>{0, 1, 0, 2});
  CHECK(rel.same_clustering(Partition({2, 0, 2, 1})));
  CHECK_FALSE(rel.same_clustering(Partition({0, 0, 0, 1})));

  std::vector<std::size_t> items = {4, 8};
  std::vector<std::int64_t> ids = {0, 1};
  save_assignments(items, ids, dir / "a.csv");
  std::vector<std::size_t> items2;
  std::vector<std::int64_t> ids2;
  load_assignments(dir / "a.csv", items2, ids2);
  CHECK(items2 == items);
  CHECK(ids2 == ids);
}
