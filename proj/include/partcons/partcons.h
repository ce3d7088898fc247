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

/* C interface to partcons. Every object crosses the boundary as an opaque
 * handle; every fallible call returns a pc_status, and the message for the
 * most recent failure on the calling thread is available from
 * pc_last_error(). Strings returned through char** are owned by the caller
 * and released with pc_string_free. Config arguments are JSON documents in
 * the run-config schema; NULL means all defaults. */
#ifndef PARTCONS_PARTCONS_H_
#define PARTCONS_PARTCONS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PARTCONS_BUILDING_LIBRARY)
#    define PC_API __declspec(dllexport)
#  else
#    define PC_API __declspec(dllimport)
#  endif
#else
#  define PC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pc_status {
  PC_OK = 0,
  PC_ERR_INVALID_ARGUMENT = 1,
  PC_ERR_IO = 2,
  PC_ERR_BAD_MAGIC = 3,
  PC_ERR_BAD_VERSION = 4,
  PC_ERR_TRUNCATED = 5,
  PC_ERR_MALFORMED = 6,
  PC_ERR_NORMALIZATION = 7,
  PC_ERR_NON_FINITE = 8,
  PC_ERR_DEGENERATE = 9,
  PC_ERR_SHAPE_MISMATCH = 10,
  PC_ERR_INTERNAL = 11
} pc_status;

typedef struct pc_array pc_array;          /* N x Q x d doubles */
typedef struct pc_labels pc_labels;        /* item, identity, camera rows */
typedef struct pc_partition pc_partition;  /* dense cluster id per item */
typedef struct pc_model pc_model;          /* trained part embedder */

/* ---- library ---------------------------------------------------------- */

PC_API const char* pc_version(void);
PC_API const char* pc_status_name(pc_status status);
/* Nonzero for file and format failures (missing file, bad magic, ...). */
PC_API int pc_status_is_io(pc_status status);
/* Message of the last failure on this thread; "" when none. */
PC_API const char* pc_last_error(void);
PC_API void pc_string_free(char* s);
/* Caps worker threads; 0 restores the hardware default. */
PC_API void pc_set_threads(size_t n);

/* level: 0 debug, 1 info, 2 warning, 3 error. */
typedef void (*pc_log_fn)(int level, const char* message, void* user);
/* NULL restores the default sink (warnings and errors to stderr). */
PC_API void pc_set_log_callback(pc_log_fn fn, void* user);

/* Validates and fills defaults. Either output may be NULL. */
PC_API pc_status pc_config_resolve(const char* config_json, char** resolved_json,
                                   char** config_hash);

/* ---- arrays ----------------------------------------------------------- */

PC_API pc_status pc_array_create(size_t n, size_t q, size_t d, const double* data,
                                 pc_array** out);
/* With require_unit every part vector must be unit length (drift up to
 * 1e-4 is re-normalized); raw feature files are loaded without it. */
PC_API pc_status pc_array_load(const char* path, int require_unit, pc_array** out);
PC_API pc_status pc_array_save(const pc_array* a, const char* path);
PC_API void pc_array_shape(const pc_array* a, size_t* n, size_t* q, size_t* d);
PC_API const double* pc_array_data(const pc_array* a);
PC_API void pc_array_free(pc_array* a);

/* ---- labels ----------------------------------------------------------- */

PC_API pc_status pc_labels_create(size_t n, const size_t* items, const int64_t* identities,
                                  const int64_t* cameras, pc_labels** out);
PC_API pc_status pc_labels_load(const char* path, pc_labels** out);
PC_API pc_status pc_labels_save(const pc_labels* l, const char* path);
PC_API size_t pc_labels_size(const pc_labels* l);
PC_API pc_status pc_labels_row(const pc_labels* l, size_t row, size_t* item, int64_t* identity,
                               int64_t* camera);
PC_API void pc_labels_free(pc_labels* l);

/* ---- partitions ------------------------------------------------------- */

/* Arbitrary non-negative cluster labels; ids are made dense by first
 * appearance. */
PC_API pc_status pc_partition_create(size_t n, const int64_t* labels, pc_partition** out);
PC_API pc_status pc_partition_load(const char* path, pc_partition** out);
PC_API pc_status pc_partition_save(const pc_partition* p, const char* path);
PC_API size_t pc_partition_size(const pc_partition* p);
PC_API size_t pc_partition_clusters(const pc_partition* p);
PC_API const size_t* pc_partition_data(const pc_partition* p);
PC_API void pc_partition_free(pc_partition* p);

/* ---- synthetic data --------------------------------------------------- */

/* Any output may be NULL. Test outputs are empty arrays when the config
 * asks for no held-out identities. */
PC_API pc_status pc_synth_generate(const char* config_json, pc_array** train_parts,
                                   pc_labels** train_labels, pc_array** train_raw,
                                   pc_array** test_parts, pc_labels** test_labels,
                                   pc_array** test_raw);

/* ---- clustering and consensus ----------------------------------------- */

/* One partition per part; `out` must hold Q handles. */
PC_API pc_status pc_cluster_parts(const pc_array* parts, const char* config_json,
                                  pc_partition** out, size_t out_capacity);

/* agree = 0 selects strict agreement (all partitions). report_json may be
 * NULL; it holds the cluster count and the agreement histogram. */
PC_API pc_status pc_consensus(const pc_partition* const* partitions, size_t count,
                              size_t agree, const char* config_json, pc_partition** out,
                              char** report_json);

/* Keeps clusters of at least min_size items. `items` and `identities` must
 * hold pc_partition_size(p) entries; *n_kept receives the count used. */
PC_API pc_status pc_filter_clusters(const pc_partition* p, size_t min_size, size_t* n_kept,
                                    size_t* items, int64_t* identities);

/* Per-part clustering, consensus and filtering on one tensor. Buffers as
 * for pc_filter_clusters, sized to the tensor's N. */
PC_API pc_status pc_pseudolabel(const pc_array* parts, const char* config_json,
                                pc_partition** consensus, size_t* n_kept, size_t* items,
                                int64_t* identities, char** report_json);

/* ---- embedder --------------------------------------------------------- */

/* Trains on every row of `labels` (item indices refer to rows of raw, a
 * Q = 1 array). With record_steps the report lists every optimizer step. */
PC_API pc_status pc_train(const pc_array* raw, const pc_labels* labels, const char* config_json,
                          int record_steps, pc_model** out, char** report_json);
/* Directory with one PET file per parameter block and manifest.json. */
PC_API pc_status pc_model_save(const pc_model* m, const char* dir, const char* config_hash);
PC_API pc_status pc_model_load(const char* dir, pc_model** out);
PC_API pc_status pc_model_embed(const pc_model* m, const pc_array* raw, pc_array** parts);
PC_API void pc_model_free(pc_model* m);

/* ---- metrics ---------------------------------------------------------- */

/* Labels must cover rows 0..N-1 of their tensor. */
PC_API pc_status pc_evaluate(const pc_array* query, const pc_labels* query_labels,
                             const pc_array* gallery, const pc_labels* gallery_labels,
                             int camera_filter, size_t max_rank, char** report_json);
PC_API pc_status pc_rand_indices(const pc_partition* a, const pc_partition* b, double* rand,
                                 double* adjusted);
/* Absent values are reported as NaN. */
PC_API pc_status pc_label_quality(size_t n, const size_t* items, const int64_t* identities,
                                  const pc_labels* truth, double* precision, double* recall);

/* ---- workflows -------------------------------------------------------- */

PC_API pc_status pc_pipeline_run(const char* config_json, int with_baseline,
                                 char** reports_jsonl, char** final_json);
/* *passed is 1 when every oracle suite agreed with the library. */
PC_API pc_status pc_selftest(uint64_t seed, size_t cases_per_suite, char** report_json,
                             int* passed);

#ifdef __cplusplus
}
#endif

#endif /* PARTCONS_PARTCONS_H_ */
