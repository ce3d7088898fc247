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

/* Exercises the C interface from C, linking only the shared library. */
#include <partcons/partcons.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                 \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

#define EXPECT_OK(call)                                                         \
  do {                                                                          \
    pc_status s_ = (call);                                                      \
    if (s_ != PC_OK) {                                                          \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,       \
              pc_status_name(s_), pc_last_error());                             \
      ++failures;                                                               \
    }                                                                           \
  } while (0)

static const char* small_config =
    "{\"seed\": 5, \"synth\": {\"n_identities\": 12, \"n_parts\": 3, \"dim\": 8,"
    " \"raw_dim\": 24, \"test_identities\": 6},"
    " \"cluster\": {\"threshold\": 1.0},"
    " \"pseudolabel\": {\"min_cluster_size\": 2, \"n_iterations\": 2},"
    " \"trainer\": {\"epochs\": 3, \"batch_identities\": 4, \"batch_instances\": 3}}";

static void test_errors(const char* dir) {
  char path[1024];
  pc_array* a = NULL;
  snprintf(path, sizeof path, "%s/missing.pet", dir);
  pc_status s = pc_array_load(path, 1, &a);
  EXPECT(s == PC_ERR_IO);
  EXPECT(pc_status_is_io(s));
  EXPECT(strlen(pc_last_error()) > 0);
  EXPECT(a == NULL);

  char* resolved = NULL;
  s = pc_config_resolve("{\"nope\": 1}", &resolved, NULL);
  EXPECT(s == PC_ERR_INVALID_ARGUMENT);
  EXPECT(!pc_status_is_io(s));
  EXPECT(strstr(pc_last_error(), "nope") != NULL);
  EXPECT(resolved == NULL);
  EXPECT(pc_config_resolve("{", NULL, NULL) == PC_ERR_MALFORMED);

  EXPECT(pc_array_create(1, 1, 1, NULL, &a) == PC_ERR_INVALID_ARGUMENT);
  EXPECT(pc_labels_row(NULL, 0, NULL, NULL, NULL) == PC_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(pc_status_name(PC_ERR_SHAPE_MISMATCH), "shape_mismatch") == 0);

  /* Success clears the stored message. */
  EXPECT_OK(pc_config_resolve(NULL, NULL, NULL));
  EXPECT(strlen(pc_last_error()) == 0);
}

static void test_config(void) {
  char *a = NULL, *b = NULL, *ha = NULL, *hb = NULL;
  EXPECT_OK(pc_config_resolve(small_config, &a, &ha));
  EXPECT_OK(pc_config_resolve(a, &b, &hb));
  EXPECT(a && b && strcmp(a, b) == 0);
  EXPECT(ha && hb && strcmp(ha, hb) == 0 && strlen(ha) == 16);
  pc_string_free(a);
  pc_string_free(b);
  pc_string_free(ha);
  pc_string_free(hb);
}

static void test_containers(const char* dir) {
  char path[1024];
  const double data[4] = {0.6, 0.8, 1.0, 0.0};
  pc_array* a = NULL;
  EXPECT_OK(pc_array_create(2, 1, 2, data, &a));
  snprintf(path, sizeof path, "%s/a.pet", dir);
  EXPECT_OK(pc_array_save(a, path));
  pc_array* back = NULL;
  EXPECT_OK(pc_array_load(path, 1, &back));
  size_t n = 0, q = 0, d = 0;
  pc_array_shape(back, &n, &q, &d);
  EXPECT(n == 2 && q == 1 && d == 2);
  /* 0.6 and 0.8 are not float32-exact; the stored values are. */
  EXPECT(fabs(pc_array_data(back)[0] - 0.6) < 1e-7);
  EXPECT(pc_array_data(back)[3] == 0.0);
  pc_array_free(a);
  pc_array_free(back);

  const size_t items[3] = {2, 0, 1};
  const int64_t ids[3] = {7, 7, 9};
  const int64_t cams[3] = {1, 2, 3};
  pc_labels* l = NULL;
  EXPECT_OK(pc_labels_create(3, items, ids, cams, &l));
  snprintf(path, sizeof path, "%s/l.csv", dir);
  EXPECT_OK(pc_labels_save(l, path));
  pc_labels* l2 = NULL;
  EXPECT_OK(pc_labels_load(path, &l2));
  EXPECT(pc_labels_size(l2) == 3);
  size_t item = 0;
  int64_t id = 0, cam = 0;
  EXPECT_OK(pc_labels_row(l2, 0, &item, &id, &cam));
  EXPECT(item == 2 && id == 7 && cam == 1);
  EXPECT(pc_labels_row(l2, 3, &item, &id, &cam) == PC_ERR_INVALID_ARGUMENT);
  pc_labels_free(l);
  pc_labels_free(l2);

  const int64_t raw_labels[5] = {40, 40, 3, 40, 3};
  pc_partition* p = NULL;
  EXPECT_OK(pc_partition_create(5, raw_labels, &p));
  EXPECT(pc_partition_size(p) == 5);
  EXPECT(pc_partition_clusters(p) == 2);
  EXPECT(pc_partition_data(p)[2] == 1);
  snprintf(path, sizeof path, "%s/p.csv", dir);
  EXPECT_OK(pc_partition_save(p, path));
  pc_partition* p2 = NULL;
  EXPECT_OK(pc_partition_load(path, &p2));
  double ri = 0, ari = 0;
  EXPECT_OK(pc_rand_indices(p, p2, &ri, &ari));
  EXPECT(ri == 1.0 && ari == 1.0);

  size_t kept = 0, kept_items[5];
  int64_t kept_ids[5];
  EXPECT_OK(pc_filter_clusters(p, 3, &kept, kept_items, kept_ids));
  EXPECT(kept == 3);
  EXPECT(kept_items[0] == 0 && kept_items[2] == 3 && kept_ids[1] == 0);
  pc_partition_free(p);
  pc_partition_free(p2);
}

static void test_workflow(const char* dir) {
  pc_array *parts = NULL, *raw = NULL, *test_parts = NULL, *test_raw = NULL;
  pc_labels *labels = NULL, *test_labels = NULL;
  EXPECT_OK(pc_synth_generate(small_config, &parts, &labels, &raw, &test_parts, &test_labels,
                              &test_raw));
  size_t n = 0, q = 0, d = 0;
  pc_array_shape(parts, &n, &q, &d);
  EXPECT(n == 72 && q == 3 && d == 8);
  pc_array_shape(raw, &n, &q, &d);
  EXPECT(n == 72 && q == 1 && d == 24);
  EXPECT(pc_labels_size(test_labels) == 36);

  pc_partition* per_part[3] = {NULL, NULL, NULL};
  EXPECT(pc_cluster_parts(parts, small_config, per_part, 2) == PC_ERR_INVALID_ARGUMENT);
  EXPECT_OK(pc_cluster_parts(parts, small_config, per_part, 3));
  pc_partition* consensus = NULL;
  char* report = NULL;
  EXPECT(pc_consensus((const pc_partition* const*)per_part, 3, 4, small_config, &consensus,
                      NULL) == PC_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(pc_last_error(), "Q = 3") != NULL);
  EXPECT_OK(pc_consensus((const pc_partition* const*)per_part, 3, 0, small_config, &consensus,
                         &report));
  EXPECT(report != NULL && strstr(report, "agreement_histogram") != NULL);
  pc_string_free(report);

  size_t kept = 0, items[72];
  int64_t ids[72];
  pc_partition* c2 = NULL;
  EXPECT_OK(pc_pseudolabel(parts, small_config, &c2, &kept, items, ids, &report));
  EXPECT(pc_partition_clusters(c2) == pc_partition_clusters(consensus));
  EXPECT(kept <= 72);
  double precision = 0, recall = 0;
  EXPECT_OK(pc_label_quality(kept, items, ids, labels, &precision, &recall));
  EXPECT(isnan(precision) || (precision >= 0.0 && precision <= 1.0));
  EXPECT_OK(pc_label_quality(0, NULL, NULL, labels, &precision, &recall));
  EXPECT(isnan(precision) && isnan(recall));
  pc_string_free(report);
  for (int i = 0; i < 3; ++i) pc_partition_free(per_part[i]);
  pc_partition_free(consensus);
  pc_partition_free(c2);

  pc_model* model = NULL;
  EXPECT_OK(pc_train(raw, labels, small_config, 1, &model, &report));
  EXPECT(report != NULL && strstr(report, "\"records\"") != NULL);
  pc_string_free(report);
  char path[1024];
  snprintf(path, sizeof path, "%s/checkpoint", dir);
  EXPECT_OK(pc_model_save(model, path, "0123456789abcdef"));
  pc_model* loaded = NULL;
  EXPECT_OK(pc_model_load(path, &loaded));
  pc_array *e1 = NULL, *e2 = NULL;
  EXPECT_OK(pc_model_embed(model, test_raw, &e1));
  EXPECT_OK(pc_model_embed(loaded, test_raw, &e2));
  pc_array_shape(e2, &n, &q, &d);
  EXPECT(n == 36 && q == 3 && d == 8);
  /* Checkpoints store float32, so embeddings agree to single precision. */
  double worst = 0.0;
  for (size_t i = 0; i < n * q * d; ++i) {
    const double diff = fabs(pc_array_data(e1)[i] - pc_array_data(e2)[i]);
    if (diff > worst) worst = diff;
  }
  EXPECT(worst < 1e-5);
  EXPECT(pc_model_embed(model, parts, &e1) == PC_ERR_SHAPE_MISMATCH);

  EXPECT_OK(pc_evaluate(e2, test_labels, e2, test_labels, 0, 3, &report));
  EXPECT(report != NULL && strstr(report, "\"map\"") != NULL);
  pc_string_free(report);
  pc_array_free(e1);
  pc_array_free(e2);
  pc_model_free(model);
  pc_model_free(loaded);

  char *lines = NULL, *final_json = NULL;
  EXPECT_OK(pc_pipeline_run(small_config, 1, &lines, &final_json));
  EXPECT(lines != NULL && strstr(lines, "\"iteration\":1") != NULL);
  EXPECT(final_json != NULL && strstr(final_json, "\"baseline\"") != NULL);
  char *lines2 = NULL;
  EXPECT_OK(pc_pipeline_run(small_config, 0, &lines2, NULL));
  EXPECT(lines2 != NULL && strcmp(lines, lines2) == 0);
  pc_string_free(lines);
  pc_string_free(lines2);
  pc_string_free(final_json);

  pc_array_free(parts);
  pc_array_free(raw);
  pc_array_free(test_parts);
  pc_array_free(test_raw);
  pc_labels_free(labels);
  pc_labels_free(test_labels);
}

static int log_calls = 0;
static void count_log(int level, const char* message, void* user) {
  (void)level;
  (void)message;
  *(int*)user += 1;
}

static void test_selftest_and_logging(void) {
  char* report = NULL;
  int passed = 0;
  pc_set_log_callback(count_log, &log_calls);
  pc_set_threads(2);
  EXPECT_OK(pc_selftest(3, 10, &report, &passed));
  EXPECT(passed == 1);
  EXPECT(report != NULL && strstr(report, "\"passed\": true") != NULL);
  pc_string_free(report);
  EXPECT(pc_selftest(3, 0, &report, &passed) == PC_ERR_INVALID_ARGUMENT);
  char *lines = NULL;
  EXPECT_OK(pc_pipeline_run(small_config, 0, &lines, NULL));
  pc_string_free(lines);
  EXPECT(log_calls > 0);
  pc_set_log_callback(NULL, NULL);
  pc_set_threads(0);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s SCRATCH_DIR\n", argv[0]);
    return 2;
  }
  EXPECT(strcmp(pc_version(), "0.1.0") == 0);
  test_errors(argv[1]);
  test_config();
  test_containers(argv[1]);
  test_workflow(argv[1]);
  test_selftest_and_logging();
  if (failures > 0) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  printf("capi: all expectations met\n");
  return 0;
}
