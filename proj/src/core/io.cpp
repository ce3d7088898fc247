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

#include "partcons/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <system_error>

#include "partcons/error.hpp"
#include "partcons/log.hpp"

namespace partcons {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* field) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, std::string("PET field ") + field + " exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "read error on " + path.string());
  return bytes;
}

void write_atomically(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::kIo, "write error on " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move output into place at " + path.string());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::int64_t parse_int(const std::string& text, const fs::path& path, std::size_t line_no) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    fail(ErrorCode::kMalformed, path.string() + ":" + std::to_string(line_no) +
                                    ": expected an integer, got '" + text + "'");
  }
  return v;
}

/// Rows of exactly `columns` integers under the given header.
std::vector<std::vector<std::int64_t>> read_int_csv(const fs::path& path,
                                                    const std::string& header,
                                                    std::size_t columns) {
  std::istringstream in(read_all(path));
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(ErrorCode::kMalformed, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    fail(ErrorCode::kMalformed,
         path.string() + ": expected header '" + header + "', got '" + line + "'");
  }
  std::vector<std::vector<std::int64_t>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      fail(ErrorCode::kMalformed, path.string() + ":" + std::to_string(line_no) +
                                      ": expected " + std::to_string(columns) + " fields");
    }
    std::vector<std::int64_t> row;
    for (const auto& f : fields) row.push_back(parse_int(f, path, line_no));
    if (row[0] < 0) {
      fail(ErrorCode::kMalformed,
           path.string() + ":" + std::to_string(line_no) + ": negative item index");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& content) {
  write_atomically(path, content);
}

std::string read_text_file(const fs::path& path) { return read_all(path); }

void save_pet(const PetArray& array, const fs::path& path) {
  require(array.data.size() == array.n_items * array.n_parts * array.dim,
          "PET array data size does not match its shape");
  std::string bytes;
  bytes.reserve(kHeaderBytes + array.data.size() * 4);
  bytes.append(kPetMagic, 4);
  put_u32(bytes, kPetVersion);
  put_u32(bytes, checked_u32(array.n_items, "N"));
  put_u32(bytes, checked_u32(array.n_parts, "Q"));
  put_u32(bytes, checked_u32(array.dim, "d"));
  for (double v : array.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "refusing to save non-finite value");
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_u32(bytes, bits);
  }
  write_atomically(path, bytes);
}

PetArray load_pet(const fs::path& path) {
  const std::string bytes = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4) fail(ErrorCode::kTruncated, path.string() + ": truncated magic");
  if (std::memcmp(bytes.data(), kPetMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, path.string() + ": bad magic, expected \"PETB\"");
  }
  if (bytes.size() < 8) fail(ErrorCode::kTruncated, path.string() + ": truncated version");
  const std::uint32_t version = get_u32(p + 4);
  if (version != kPetVersion) {
    fail(ErrorCode::kBadVersion,
         path.string() + ": unsupported version " + std::to_string(version));
  }
  if (bytes.size() < kHeaderBytes) {
    fail(ErrorCode::kTruncated, path.string() + ": truncated header (N, Q, d)");
  }
  PetArray out;
  out.n_items = get_u32(p + 8);
  out.n_parts = get_u32(p + 12);
  out.dim = get_u32(p + 16);
  if (out.n_parts == 0) fail(ErrorCode::kMalformed, path.string() + ": field Q is zero");
  if (out.dim == 0) fail(ErrorCode::kMalformed, path.string() + ": field d is zero");
  const std::uint64_t count = static_cast<std::uint64_t>(out.n_items) * out.n_parts * out.dim;
  const std::uint64_t have = (bytes.size() - kHeaderBytes) / 4;
  if (have < count) {
    fail(ErrorCode::kTruncated, path.string() + ": payload declares " + std::to_string(count) +
                                    " floats (N=" + std::to_string(out.n_items) +
                                    "), found " + std::to_string(have));
  }
  if (bytes.size() != kHeaderBytes + count * 4) {
    fail(ErrorCode::kMalformed, path.string() + ": trailing bytes after payload");
  }
  out.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(get_u32(p + kHeaderBytes + 4 * i));
    if (!std::isfinite(f)) {
      fail(ErrorCode::kNonFinite, path.string() + ": non-finite payload value");
    }
    out.data[i] = static_cast<double>(f);
  }
  return out;
}

void save_tensor(const PartEmbeddingTensor& tensor, const fs::path& path) {
  save_pet(tensor.as_array(), path);
}

PartEmbeddingTensor load_tensor(const fs::path& path) {
  PetArray a = load_pet(path);
  std::size_t renormalized = 0;
  for (std::size_t v = 0; v < a.n_items * a.n_parts; ++v) {
    double* x = a.data.data() + v * a.dim;
    double sq = 0.0;
    for (std::size_t c = 0; c < a.dim; ++c) sq += x[c] * x[c];
    const double norm = std::sqrt(sq);
    const double drift = std::abs(norm - 1.0);
    if (drift > kLoadRenormTolerance) {
      fail(ErrorCode::kNormalization,
           path.string() + ": part vector " + std::to_string(v / a.n_parts) + "/" +
               std::to_string(v % a.n_parts) + " has norm " + std::to_string(norm));
    }
    if (drift > PartEmbeddingTensor::kUnitTolerance) {
      for (std::size_t c = 0; c < a.dim; ++c) x[c] /= norm;
      ++renormalized;
    }
  }
  if (renormalized > 0) {
    log_message(LogLevel::kInfo, path.string() + ": re-normalized " +
                                     std::to_string(renormalized) + " part vectors");
  }
  return PartEmbeddingTensor(std::move(a));
}

void save_labels(const LabelTable& labels, const fs::path& path) {
  std::string out = "item,identity,camera\n";
  for (const auto& r : labels.rows()) {
    out += std::to_string(r.item) + "," + std::to_string(r.identity) + "," +
           std::to_string(r.camera) + "\n";
  }
  write_atomically(path, out);
}

LabelTable load_labels(const fs::path& path) {
  std::vector<LabelRow> rows;
  for (const auto& r : read_int_csv(path, "item,identity,camera", 3)) {
    rows.push_back({static_cast<std::size_t>(r[0]), r[1], r[2]});
  }
  return LabelTable(std::move(rows));
}

void save_partition(const Partition& partition, const fs::path& path) {
  std::string out = "item,cluster\n";
  for (std::size_t i = 0; i < partition.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(partition[i]) + "\n";
  }
  write_atomically(path, out);
}

Partition load_partition(const fs::path& path) {
  const auto rows = read_int_csv(path, "item,cluster", 2);
  std::vector<std::size_t> assignment(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& r : rows) {
    const auto item = static_cast<std::size_t>(r[0]);
    if (item >= rows.size() || seen[item]) {
      fail(ErrorCode::kMalformed,
           path.string() + ": items must be 0..N-1, each exactly once (item " +
               std::to_string(item) + ")");
    }
    if (r[1] < 0) fail(ErrorCode::kMalformed, path.string() + ": negative cluster id");
    seen[item] = true;
    assignment[item] = static_cast<std::size_t>(r[1]);
  }
  try {
    return Partition(std::move(assignment));
  } catch (const Error& e) {
    fail(ErrorCode::kMalformed, path.string() + ": " + e.what());
  }
}

void save_assignments(const std::vector<std::size_t>& items,
                      const std::vector<std::int64_t>& labels, const fs::path& path) {
  require(items.size() == labels.size(), "items and labels differ in length");
  std::string out = "item,identity\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(items[i]) + "," + std::to_string(labels[i]) + "\n";
  }
  write_atomically(path, out);
}

void load_assignments(const fs::path& path, std::vector<std::size_t>& items,
                      std::vector<std::int64_t>& labels) {
  items.clear();
  labels.clear();
  for (const auto& r : read_int_csv(path, "item,identity", 2)) {
    items.push_back(static_cast<std::size_t>(r[0]));
    labels.push_back(r[1]);
  }
}

}  // namespace partcons
