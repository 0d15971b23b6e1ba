/*
 * Copyright 2026 The embtree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the embtree library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Functions return an embtree_status; on failure
 * embtree_last_error() describes the problem for the calling thread.
 * Strings returned through char** are allocated by the library and must be
 * released with embtree_string_free(). */

#ifndef EMBTREE_EMBTREE_H_
#define EMBTREE_EMBTREE_H_

#include <stddef.h>

#if defined(EMBTREE_BUILDING_LIBRARY)
#define EMBTREE_API __attribute__((visibility("default")))
#else
#define EMBTREE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum embtree_status {
  EMBTREE_OK = 0,
  EMBTREE_ERR_INVALID_ARGUMENT = 1,
  EMBTREE_ERR_IO = 2,
  EMBTREE_ERR_PARSE = 3,
  EMBTREE_ERR_VALIDATION = 4,
  EMBTREE_ERR_SCHEMA = 5,
  EMBTREE_ERR_NOT_FOUND = 6,
  EMBTREE_ERR_MISSING_FEATURE = 7,
  EMBTREE_ERR_FINGERPRINT = 8,
  EMBTREE_ERR_INTERNAL = 9
} embtree_status;

typedef struct embtree_dataset embtree_dataset;
typedef struct embtree_tree embtree_tree;
typedef struct embtree_server embtree_server;

typedef struct embtree_build_options {
  size_t bin_count;     /* >= 2, default 3 */
  size_t min_node_size; /* >= 2, default 20 */
  size_t max_depth;     /* default 10 */
  size_t min_side;      /* default 1 */
  int parallel;         /* nonzero: multithreaded build, same result */
} embtree_build_options;

typedef struct embtree_tree_summary {
  size_t entities;
  size_t dim;
  size_t features;
  size_t nodes;
  size_t leaves;
  size_t depth;
} embtree_tree_summary;

EMBTREE_API const char* embtree_last_error(void);
EMBTREE_API const char* embtree_status_string(embtree_status status);
EMBTREE_API void embtree_string_free(char* str);

/* Datasets. schema_path may be NULL to infer feature kinds. */
EMBTREE_API embtree_status embtree_dataset_load(const char* embeddings_path,
                                                const char* features_path,
                                                const char* schema_path,
                                                embtree_dataset** out);
/* Loads data with the feature kinds recorded in `tree` and checks that it is
 * the data the tree was built from (EMBTREE_ERR_FINGERPRINT otherwise). */
EMBTREE_API embtree_status embtree_dataset_load_for_tree(const embtree_tree* tree,
                                                         const char* embeddings_path,
                                                         const char* features_path,
                                                         embtree_dataset** out);
EMBTREE_API embtree_status embtree_dataset_shape(const embtree_dataset* dataset,
                                                 size_t* rows, size_t* dim);
EMBTREE_API void embtree_dataset_free(embtree_dataset* dataset);

/* Trees. */
EMBTREE_API void embtree_build_options_init(embtree_build_options* options);
EMBTREE_API embtree_status embtree_tree_build(const embtree_dataset* dataset,
                                              const embtree_build_options* options,
                                              embtree_tree** out);
EMBTREE_API embtree_status embtree_tree_from_json(const char* json, size_t length,
                                                  embtree_tree** out);
EMBTREE_API embtree_status embtree_tree_to_json(const embtree_tree* tree, char** out,
                                                size_t* length);
EMBTREE_API embtree_status embtree_tree_load(const char* path, embtree_tree** out);
EMBTREE_API embtree_status embtree_tree_save(const embtree_tree* tree, const char* path);
EMBTREE_API embtree_status embtree_tree_summary_get(const embtree_tree* tree,
                                                    embtree_tree_summary* out);
EMBTREE_API void embtree_tree_free(embtree_tree* tree);

/* Analysis. Results are JSON text. */
EMBTREE_API embtree_status embtree_diagnose_leaf_json(const embtree_tree* tree,
                                                      const embtree_dataset* dataset,
                                                      size_t leaf_id, char** out);
/* One JSON object per line for every leaf with at least 2 * min_side entities. */
EMBTREE_API embtree_status embtree_diagnose_all_jsonl(const embtree_tree* tree,
                                                      const embtree_dataset* dataset,
                                                      char** out);
EMBTREE_API embtree_status embtree_infer_json(const embtree_tree* tree,
                                              const char* features_json, char** out);

/* HTTP explorer API. The server shares the tree and dataset; callers may free
 * their handles after embtree_server_load. */
EMBTREE_API embtree_status embtree_server_create(const char* cors_origin,
                                                 embtree_server** out);
EMBTREE_API embtree_status embtree_server_load(embtree_server* server,
                                               const embtree_tree* tree,
                                               const embtree_dataset* dataset);
/* port 0 picks a free port; the bound port is written to bound_port. */
EMBTREE_API embtree_status embtree_server_bind(embtree_server* server, const char* host,
                                               int port, int* bound_port);
/* Blocks until embtree_server_stop is called from another thread. */
EMBTREE_API embtree_status embtree_server_run(embtree_server* server);
EMBTREE_API void embtree_server_stop(embtree_server* server);
EMBTREE_API void embtree_server_free(embtree_server* server);

#ifdef __cplusplus
}
#endif

#endif /* EMBTREE_EMBTREE_H_ */
