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

#include "partcons/partcons.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <limits>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oracle.hpp"
#include "partcons/cluster.hpp"
#include "partcons/config.hpp"
#include "partcons/consensus.hpp"
#include "partcons/embedder.hpp"
#include "partcons/error.hpp"
#include "partcons/io.hpp"
#include "partcons/log.hpp"
#include "partcons/metrics.hpp"
#include "partcons/parallel.hpp"
#include "partcons/pipeline.hpp"
#include "partcons/synth.hpp"
#include "partcons/workflow.hpp"

struct pc_array {
  partcons::PetArray value;
};
struct pc_labels {
  partcons::LabelTable value;
};
struct pc_partition {
  partcons::Partition value;
};
struct pc_model {
  partcons::EmbedderParams value;
};

namespace {

using nlohmann::json;
namespace pc = partcons;

thread_local std::string g_last_error;

pc_status to_status(pc::ErrorCode code) {
  switch (code) {
    case pc::ErrorCode::kInvalidArgument: return PC_ERR_INVALID_ARGUMENT;
    case pc::ErrorCode::kIo: return PC_ERR_IO;
    case pc::ErrorCode::kBadMagic: return PC_ERR_BAD_MAGIC;
    case pc::ErrorCode::kBadVersion: return PC_ERR_BAD_VERSION;
    case pc::ErrorCode::kTruncated: return PC_ERR_TRUNCATED;
    case pc::ErrorCode::kMalformed: return PC_ERR_MALFORMED;
    case pc::ErrorCode::kNormalization: return PC_ERR_NORMALIZATION;
    case pc::ErrorCode::kNonFinite: return PC_ERR_NON_FINITE;
    case pc::ErrorCode::kDegenerate: return PC_ERR_DEGENERATE;
    case pc::ErrorCode::kShapeMismatch: return PC_ERR_SHAPE_MISMATCH;
  }
  return PC_ERR_INTERNAL;
}

// Runs fn, converting every exception into a status and a stored message.
template <typename Fn>
pc_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return PC_OK;
  } catch (const pc::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return PC_ERR_MALFORMED;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PC_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) pc::fail(pc::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

pc::RunConfig config_from(const char* text) {
  return text == nullptr ? pc::default_run_config() : pc::parse_run_config(text);
}

pc::PartEmbeddingTensor tensor_of(const pc_array* a) {
  need(a, "array");
  return pc::PartEmbeddingTensor(a->value);
}

pc::Matrix matrix_of(const pc_array* a) {
  need(a, "array");
  return pc::to_matrix(a->value);
}

template <typename T, typename... Args>
T* make(Args&&... args) {
  return new T{std::forward<Args>(args)...};
}

pc::RetrievalSide side_of(const pc::LabelTable& labels, std::size_t n_rows) {
  labels.check_items(n_rows);
  pc::RetrievalSide side;
  side.identities = labels.identities_by_item(n_rows);
  side.cameras.assign(n_rows, 0);
  for (const auto& r : labels.rows()) side.cameras[r.item] = r.camera;
  return side;
}

void copy_pseudo(const pc::PseudoLabels& p, std::size_t* n_kept, std::size_t* items,
                 std::int64_t* identities) {
  if (n_kept != nullptr) *n_kept = p.items.size();
  if (items != nullptr) std::copy(p.items.begin(), p.items.end(), items);
  if (identities != nullptr) std::copy(p.identities.begin(), p.identities.end(), identities);
}

std::string block_name(const char* kind, std::size_t q) {
  return std::string(kind) + "_" + std::to_string(q) + ".pet";
}

}  // namespace

extern "C" {

const char* pc_version(void) { return "0.1.0"; }

const char* pc_status_name(pc_status status) {
  switch (status) {
    case PC_OK: return "ok";
    case PC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PC_ERR_IO: return "io";
    case PC_ERR_BAD_MAGIC: return "bad_magic";
    case PC_ERR_BAD_VERSION: return "bad_version";
    case PC_ERR_TRUNCATED: return "truncated";
    case PC_ERR_MALFORMED: return "malformed";
    case PC_ERR_NORMALIZATION: return "normalization";
    case PC_ERR_NON_FINITE: return "non_finite";
    case PC_ERR_DEGENERATE: return "degenerate";
    case PC_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case PC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int pc_status_is_io(pc_status status) {
  return status == PC_ERR_IO || status == PC_ERR_BAD_MAGIC || status == PC_ERR_BAD_VERSION ||
         status == PC_ERR_TRUNCATED || status == PC_ERR_MALFORMED;
}

const char* pc_last_error(void) { return g_last_error.c_str(); }

void pc_string_free(char* s) { std::free(s); }

void pc_set_threads(size_t n) { pc::set_max_threads(n); }

void pc_set_log_callback(pc_log_fn fn, void* user) {
  if (fn == nullptr) {
    pc::set_log_sink([](pc::LogLevel level, const std::string& message) {
      if (level >= pc::LogLevel::kWarning) std::fprintf(stderr, "partcons: %s\n", message.c_str());
    });
    return;
  }
  pc::set_log_sink([fn, user](pc::LogLevel level, const std::string& message) {
    fn(static_cast<int>(level), message.c_str(), user);
  });
}

pc_status pc_config_resolve(const char* config_json, char** resolved_json, char** config_hash) {
  return guarded([&] {
    const pc::RunConfig c = config_from(config_json);
    const std::string text = pc::resolved_config_text(c);
    const std::string hash = pc::config_hash(c);
    put_string(resolved_json, text);
    put_string(config_hash, hash);
  });
}

// ---- arrays

pc_status pc_array_create(size_t n, size_t q, size_t d, const double* data, pc_array** out) {
  return guarded([&] {
    need(out, "out");
    pc::require(q >= 1 && d >= 1, "array shape needs q >= 1 and d >= 1");
    const std::size_t total = n * q * d;
    pc::require(total == 0 || data != nullptr, "array data is NULL");
    pc::PetArray a{n, q, d, std::vector<double>(data, data + total)};
    *out = make<pc_array>(std::move(a));
  });
}

pc_status pc_array_load(const char* path, int require_unit, pc_array** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    pc::PetArray a = require_unit ? pc::load_tensor(path).as_array() : pc::load_pet(path);
    *out = make<pc_array>(std::move(a));
  });
}

pc_status pc_array_save(const pc_array* a, const char* path) {
  return guarded([&] {
    need(a, "array");
    need(path, "path");
    pc::save_pet(a->value, path);
  });
}

void pc_array_shape(const pc_array* a, size_t* n, size_t* q, size_t* d) {
  if (n != nullptr) *n = a != nullptr ? a->value.n_items : 0;
  if (q != nullptr) *q = a != nullptr ? a->value.n_parts : 0;
  if (d != nullptr) *d = a != nullptr ? a->value.dim : 0;
}

const double* pc_array_data(const pc_array* a) {
  return a != nullptr ? a->value.data.data() : nullptr;
}

void pc_array_free(pc_array* a) { delete a; }

// ---- labels

pc_status pc_labels_create(size_t n, const size_t* items, const int64_t* identities,
                           const int64_t* cameras, pc_labels** out) {
  return guarded([&] {
    need(out, "out");
    pc::require(n == 0 || (items != nullptr && identities != nullptr),
                "label items or identities are NULL");
    std::vector<pc::LabelRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = {items[i], identities[i], cameras != nullptr ? cameras[i] : 0};
    }
    *out = make<pc_labels>(pc::LabelTable(std::move(rows)));
  });
}

pc_status pc_labels_load(const char* path, pc_labels** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = make<pc_labels>(pc::load_labels(path));
  });
}

pc_status pc_labels_save(const pc_labels* l, const char* path) {
  return guarded([&] {
    need(l, "labels");
    need(path, "path");
    pc::save_labels(l->value, path);
  });
}

size_t pc_labels_size(const pc_labels* l) { return l != nullptr ? l->value.size() : 0; }

pc_status pc_labels_row(const pc_labels* l, size_t row, size_t* item, int64_t* identity,
                        int64_t* camera) {
  return guarded([&] {
    need(l, "labels");
    pc::require(row < l->value.size(), "label row out of range");
    const auto& r = l->value.rows()[row];
    if (item != nullptr) *item = r.item;
    if (identity != nullptr) *identity = r.identity;
    if (camera != nullptr) *camera = r.camera;
  });
}

void pc_labels_free(pc_labels* l) { delete l; }

// ---- partitions

pc_status pc_partition_create(size_t n, const int64_t* labels, pc_partition** out) {
  return guarded([&] {
    need(out, "out");
    pc::require(n == 0 || labels != nullptr, "partition labels are NULL");
    *out = make<pc_partition>(pc::Partition::from_labels(std::span(labels, n)));
  });
}

pc_status pc_partition_load(const char* path, pc_partition** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = make<pc_partition>(pc::load_partition(path));
  });
}

pc_status pc_partition_save(const pc_partition* p, const char* path) {
  return guarded([&] {
    need(p, "partition");
    need(path, "path");
    pc::save_partition(p->value, path);
  });
}

size_t pc_partition_size(const pc_partition* p) { return p != nullptr ? p->value.size() : 0; }

size_t pc_partition_clusters(const pc_partition* p) {
  return p != nullptr ? p->value.n_clusters() : 0;
}

const size_t* pc_partition_data(const pc_partition* p) {
  return p != nullptr ? p->value.assignment().data() : nullptr;
}

void pc_partition_free(pc_partition* p) { delete p; }

// ---- synthetic data

pc_status pc_synth_generate(const char* config_json, pc_array** train_parts,
                            pc_labels** train_labels, pc_array** train_raw, pc_array** test_parts,
                            pc_labels** test_labels, pc_array** test_raw) {
  return guarded([&] {
    const pc::RunConfig c = config_from(config_json);
    pc::SynthData d = pc::generate(c.synth);
    // Allocate everything first so a failure leaves no half-filled outputs.
    std::vector<pc_array*> arrays;
    std::vector<pc_labels*> tables;
    try {
      arrays.push_back(make<pc_array>(d.train.parts.as_array()));
      arrays.push_back(make<pc_array>(pc::to_pet(d.train.raw)));
      arrays.push_back(make<pc_array>(d.test.parts.as_array()));
      arrays.push_back(make<pc_array>(pc::to_pet(d.test.raw)));
      tables.push_back(make<pc_labels>(std::move(d.train.labels)));
      tables.push_back(make<pc_labels>(std::move(d.test.labels)));
    } catch (...) {
      for (auto* a : arrays) delete a;
      for (auto* t : tables) delete t;
      throw;
    }
    auto hand = [](auto** out, auto* value) {
      if (out != nullptr) {
        *out = value;
      } else {
        delete value;
      }
    };
    hand(train_parts, arrays[0]);
    hand(train_raw, arrays[1]);
    hand(test_parts, arrays[2]);
    hand(test_raw, arrays[3]);
    hand(train_labels, tables[0]);
    hand(test_labels, tables[1]);
  });
}

// ---- clustering and consensus

pc_status pc_cluster_parts(const pc_array* parts, const char* config_json, pc_partition** out,
                           size_t out_capacity) {
  return guarded([&] {
    need(out, "out");
    const pc::RunConfig c = config_from(config_json);
    const auto tensor = tensor_of(parts);
    pc::require(out_capacity >= tensor.n_parts(),
                "output holds " + std::to_string(out_capacity) + " partitions but the tensor has " +
                    std::to_string(tensor.n_parts()) + " parts");
    auto partitions = pc::cluster_parts(tensor, c.pipeline.cluster_config);
    for (std::size_t q = 0; q < partitions.size(); ++q) {
      out[q] = make<pc_partition>(std::move(partitions[q]));
    }
  });
}

pc_status pc_consensus(const pc_partition* const* partitions, size_t count, size_t agree,
                       const char* config_json, pc_partition** out, char** report_json) {
  return guarded([&] {
    need(out, "out");
    need(partitions, "partitions");
    const pc::RunConfig c = config_from(config_json);
    std::vector<pc::Partition> ensemble;
    for (std::size_t q = 0; q < count; ++q) {
      need(partitions[q], "partition");
      ensemble.push_back(partitions[q]->value);
    }
    pc::require(!ensemble.empty(), "consensus needs at least one partition");
    const pc::AgreementLevel level{agree == 0 ? count : agree};
    pc::validate_agreement(level, count);
    const auto m = pc::co_association(ensemble);
    pc::Partition result = pc::consensus_partition(m, level, count, c.pipeline.consensus_linkage);
    if (report_json != nullptr) {
      const json doc = {{"n_items", m.n_items()},
                        {"n_partitions", count},
                        {"agree", level.required_parts},
                        {"n_clusters", result.n_clusters()},
                        {"agreement_histogram", m.agreement_histogram()}};
      *report_json = dup_string(pc::dump_canonical(doc));
    }
    *out = make<pc_partition>(std::move(result));
  });
}

pc_status pc_filter_clusters(const pc_partition* p, size_t min_size, size_t* n_kept,
                             size_t* items, int64_t* identities) {
  return guarded([&] {
    need(p, "partition");
    copy_pseudo(pc::filter_clusters(p->value, min_size), n_kept, items, identities);
  });
}

pc_status pc_pseudolabel(const pc_array* parts, const char* config_json, pc_partition** consensus,
                         size_t* n_kept, size_t* items, int64_t* identities, char** report_json) {
  return guarded([&] {
    const pc::RunConfig c = config_from(config_json);
    const auto tensor = tensor_of(parts);
    pc::PipelineConfig pipeline = c.pipeline;
    pipeline.n_parts = tensor.n_parts();
    const pc::PseudoLabelStep step = pc::pseudo_label_step(tensor, pipeline);
    std::vector<std::size_t> per_part;
    for (const auto& part : step.part_partitions) per_part.push_back(part.n_clusters());
    std::string report;
    if (report_json != nullptr) {
      std::int64_t identities_kept = 0;
      for (auto id : step.pseudo.identities) identities_kept = std::max(identities_kept, id + 1);
      const json doc = {{"n_items", tensor.n_items()},
                        {"clusters_per_part", per_part},
                        {"consensus_clusters", step.consensus.n_clusters()},
                        {"n_pseudo_labeled", step.pseudo.items.size()},
                        {"n_pseudo_identities", identities_kept},
                        {"agreement_histogram", step.co_association.agreement_histogram()}};
      report = pc::dump_canonical(doc);
    }
    pc_partition* made = consensus != nullptr ? make<pc_partition>(step.consensus) : nullptr;
    copy_pseudo(step.pseudo, n_kept, items, identities);
    if (consensus != nullptr) *consensus = made;
    if (report_json != nullptr) *report_json = dup_string(report);
  });
}

// ---- embedder

pc_status pc_train(const pc_array* raw, const pc_labels* labels, const char* config_json,
                   int record_steps, pc_model** out, char** report_json) {
  return guarded([&] {
    need(out, "out");
    need(labels, "labels");
    const pc::RunConfig c = config_from(config_json);
    const pc::Matrix features = matrix_of(raw);
    labels->value.check_items(features.rows());

    pc::SplitState split;
    std::int64_t max_id = -1;
    for (const auto& r : labels->value.rows()) {
      split.labeled_items.push_back(r.item);
      split.labeled_ids.push_back(r.identity);
      max_id = std::max(max_id, r.identity);
    }
    split.pseudo_id_offset = max_id + 1;

    // Same seeds as the first pipeline iteration.
    const std::uint64_t seed = pc::iteration_seed(c.seed, 1);
    const pc::PipelineConfig& p = c.pipeline;
    pc::TrainerConfig t = p.trainer_config;
    t.seed = pc::derive_seed(seed, "train");
    t.record_steps = record_steps != 0;
    const auto init = pc::init_params(p.n_parts, features.cols(), p.embed_dim,
                                      pc::derive_seed(seed, "init"));
    pc::TrainResult result = pc::train(init, split, features, t);

    std::string report;
    if (report_json != nullptr) {
      json steps = json::array();
      for (const auto& r : result.records) {
        steps.push_back({{"epoch", r.epoch},
                         {"step", r.step},
                         {"learning_rate", r.learning_rate},
                         {"total", r.loss.total},
                         {"cross_entropy", r.loss.cross_entropy},
                         {"triplet", r.loss.triplet},
                         {"partmixup", r.loss.partmixup},
                         {"partmixup_sum", r.loss.partmixup_sum}});
      }
      const json doc = {{"config_hash", pc::config_hash(c)},
                        {"n_items", split.labeled_items.size()},
                        {"steps", result.steps},
                        {"probe_loss_start", result.probe_loss_start},
                        {"probe_loss_end", result.probe_loss_end},
                        {"records", steps}};
      report = pc::dump_canonical(doc);
    }
    *out = make<pc_model>(std::move(result.params));
    if (report_json != nullptr) *report_json = dup_string(report);
  });
}

pc_status pc_model_save(const pc_model* m, const char* dir, const char* config_hash) {
  return guarded([&] {
    need(m, "model");
    need(dir, "dir");
    const auto& p = m->value;
    p.validate();
    const std::filesystem::path root(dir);
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) pc::fail(pc::ErrorCode::kIo, "cannot create " + root.string() + ": " + ec.message());
    json blocks = json::array();
    for (std::size_t q = 0; q < p.n_parts; ++q) {
      const std::string w = block_name("weight", q), b = block_name("bias", q);
      pc::save_pet(pc::to_pet(p.weights[q]), root / w);
      pc::save_pet(pc::PetArray{1, 1, p.dim, p.biases[q]}, root / b);
      blocks.push_back({{"part", q}, {"weight", w}, {"bias", b}});
    }
    const json manifest = {{"format", "partcons-embedder"},
                           {"version", 1},
                           {"config_hash", config_hash != nullptr ? config_hash : ""},
                           {"n_parts", p.n_parts},
                           {"raw_dim", p.raw_dim},
                           {"dim", p.dim},
                           {"seed", p.seed},
                           {"blocks", blocks}};
    pc::write_text_file(root / "manifest.json", pc::dump_canonical(manifest));
  });
}

pc_status pc_model_load(const char* dir, pc_model** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    const std::filesystem::path root(dir);
    json manifest;
    try {
      manifest = json::parse(pc::read_text_file(root / "manifest.json"));
    } catch (const json::parse_error& e) {
      pc::fail(pc::ErrorCode::kMalformed, std::string("manifest.json: ") + e.what());
    }
    if (manifest.value("format", "") != "partcons-embedder") {
      pc::fail(pc::ErrorCode::kMalformed, "manifest.json: not an embedder checkpoint");
    }
    pc::EmbedderParams p;
    p.n_parts = manifest.at("n_parts").get<std::size_t>();
    p.raw_dim = manifest.at("raw_dim").get<std::size_t>();
    p.dim = manifest.at("dim").get<std::size_t>();
    p.seed = manifest.at("seed").get<std::uint64_t>();
    const auto& blocks = manifest.at("blocks");
    if (blocks.size() != p.n_parts) {
      pc::fail(pc::ErrorCode::kMalformed, "manifest.json: block count differs from n_parts");
    }
    for (const auto& b : blocks) {
      p.weights.push_back(pc::to_matrix(pc::load_pet(root / b.at("weight").get<std::string>())));
      pc::PetArray bias = pc::load_pet(root / b.at("bias").get<std::string>());
      p.biases.push_back(std::move(bias.data));
    }
    try {
      p.validate();
    } catch (const pc::Error& e) {
      pc::fail(pc::ErrorCode::kMalformed, std::string("checkpoint: ") + e.what());
    }
    *out = make<pc_model>(std::move(p));
  });
}

pc_status pc_model_embed(const pc_model* m, const pc_array* raw, pc_array** parts) {
  return guarded([&] {
    need(m, "model");
    need(parts, "parts");
    *parts = make<pc_array>(pc::forward(m->value, matrix_of(raw)).as_array());
  });
}

void pc_model_free(pc_model* m) { delete m; }

// ---- metrics

pc_status pc_evaluate(const pc_array* query, const pc_labels* query_labels,
                      const pc_array* gallery, const pc_labels* gallery_labels, int camera_filter,
                      size_t max_rank, char** report_json) {
  return guarded([&] {
    need(report_json, "report_json");
    need(query_labels, "query labels");
    need(gallery_labels, "gallery labels");
    const pc::Matrix q = pc::concat_parts(tensor_of(query));
    const pc::Matrix g = pc::concat_parts(tensor_of(gallery));
    pc::RetrievalProtocol protocol;
    protocol.query = side_of(query_labels->value, q.rows());
    protocol.gallery = side_of(gallery_labels->value, g.rows());
    protocol.camera_filter = camera_filter != 0;
    const auto report = pc::evaluate_retrieval(q, g, protocol, max_rank);
    *report_json = dup_string(pc::dump_canonical(pc::to_json(report)));
  });
}

pc_status pc_rand_indices(const pc_partition* a, const pc_partition* b, double* rand,
                          double* adjusted) {
  return guarded([&] {
    need(a, "partition a");
    need(b, "partition b");
    const double ri = pc::rand_index(a->value, b->value);
    const double ari = pc::adjusted_rand_index(a->value, b->value);
    if (rand != nullptr) *rand = ri;
    if (adjusted != nullptr) *adjusted = ari;
  });
}

pc_status pc_label_quality(size_t n, const size_t* items, const int64_t* identities,
                           const pc_labels* truth, double* precision, double* recall) {
  return guarded([&] {
    need(truth, "truth");
    pc::require(n == 0 || (items != nullptr && identities != nullptr),
                "pseudo-label buffers are NULL");
    const auto q = pc::pairwise_label_quality(std::span(items, n), std::span(identities, n),
                                              truth->value);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (precision != nullptr) *precision = q.precision.value_or(nan);
    if (recall != nullptr) *recall = q.recall.value_or(nan);
  });
}

// ---- workflows

pc_status pc_pipeline_run(const char* config_json, int with_baseline, char** reports_jsonl,
                          char** final_json) {
  return guarded([&] {
    const pc::RunConfig c = config_from(config_json);
    const pc::PipelineRun run = pc::run_configured_pipeline(c, with_baseline != 0);
    char* reports = reports_jsonl != nullptr ? dup_string(run.reports_jsonl) : nullptr;
    try {
      put_string(final_json, run.final_json);
    } catch (...) {
      std::free(reports);
      throw;
    }
    if (reports_jsonl != nullptr) *reports_jsonl = reports;
  });
}

pc_status pc_selftest(uint64_t seed, size_t cases_per_suite, char** report_json, int* passed) {
  return guarded([&] {
    pc::require(cases_per_suite >= 1, "selftest needs at least one case per suite");
    const auto suites = pc::oracle::run_selftest(seed, cases_per_suite);
    bool ok = true;
    json list = json::array();
    for (const auto& s : suites) {
      ok = ok && s.failures == 0;
      list.push_back({{"suite", s.name},
                      {"cases", s.cases},
                      {"failures", s.failures},
                      {"first_failure", s.first_failure}});
    }
    const json doc = {{"seed", seed}, {"passed", ok}, {"suites", list}};
    put_string(report_json, pc::dump_canonical(doc));
    if (passed != nullptr) *passed = ok ? 1 : 0;
  });
}

}  // extern "C"
