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

#include "embtree/embtree.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "embtree/analysis.hpp"
#include "embtree/dataset.hpp"
#include "embtree/error.hpp"
#include "embtree/json_views.hpp"
#include "embtree/server.hpp"
#include "embtree/tree.hpp"

struct embtree_dataset {
  std::shared_ptr<const embtree::Dataset> value;
};

struct embtree_tree {
  std::shared_ptr<const embtree::EmbeddingTree> value;
};

struct embtree_server {
  embtree::HttpServer server;
  explicit embtree_server(std::string cors) : server(std::move(cors)) {}
};

namespace {

thread_local std::string g_last_error;

embtree_status ToStatus(embtree::ErrorCode code) {
  using embtree::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return EMBTREE_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return EMBTREE_ERR_IO;
    case ErrorCode::kParse: return EMBTREE_ERR_PARSE;
    case ErrorCode::kValidation: return EMBTREE_ERR_VALIDATION;
    case ErrorCode::kSchema: return EMBTREE_ERR_SCHEMA;
    case ErrorCode::kNotFound: return EMBTREE_ERR_NOT_FOUND;
    case ErrorCode::kMissingFeature: return EMBTREE_ERR_MISSING_FEATURE;
    case ErrorCode::kFingerprint: return EMBTREE_ERR_FINGERPRINT;
  }
  return EMBTREE_ERR_INTERNAL;
}

template <typename F>
embtree_status Guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return EMBTREE_OK;
  } catch (const embtree::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return EMBTREE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EMBTREE_ERR_INTERNAL;
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw embtree::Error(embtree::ErrorCode::kInvalidArgument, what);
}

char* CopyString(const std::string& s, size_t* length = nullptr) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  if (length) *length = s.size();
  return out;
}

}  // namespace

extern "C" {

const char* embtree_last_error(void) { return g_last_error.c_str(); }

const char* embtree_status_string(embtree_status status) {
  switch (status) {
    case EMBTREE_OK: return "ok";
    case EMBTREE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EMBTREE_ERR_IO: return "i/o error";
    case EMBTREE_ERR_PARSE: return "parse error";
    case EMBTREE_ERR_VALIDATION: return "validation error";
    case EMBTREE_ERR_SCHEMA: return "schema error";
    case EMBTREE_ERR_NOT_FOUND: return "not found";
    case EMBTREE_ERR_MISSING_FEATURE: return "missing feature";
    case EMBTREE_ERR_FINGERPRINT: return "fingerprint mismatch";
    case EMBTREE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void embtree_string_free(char* str) { std::free(str); }

embtree_status embtree_dataset_load(const char* embeddings_path, const char* features_path,
                                    const char* schema_path, embtree_dataset** out) {
  return Guard([&] {
    Require(embeddings_path && features_path && out, "null argument");
    std::optional<std::filesystem::path> schema;
    if (schema_path) schema = schema_path;
    auto data = std::make_shared<embtree::Dataset>(
        embtree::LoadDatasetFiles(embeddings_path, features_path, schema));
    *out = new embtree_dataset{std::move(data)};
  });
}

embtree_status embtree_dataset_load_for_tree(const embtree_tree* tree,
                                             const char* embeddings_path,
                                             const char* features_path,
                                             embtree_dataset** out) {
  return Guard([&] {
    Require(tree && embeddings_path && features_path && out, "null argument");
    std::ifstream emb(embeddings_path, std::ios::binary);
    if (!emb) throw embtree::Error(embtree::ErrorCode::kIo, std::string("cannot open ") + embeddings_path);
    std::ifstream feat(features_path, std::ios::binary);
    if (!feat) throw embtree::Error(embtree::ErrorCode::kIo, std::string("cannot open ") + features_path);
    auto data = std::make_shared<embtree::Dataset>(
        embtree::LoadDataset(emb, feat, tree->value->params.schema));
    embtree::VerifyFingerprint(*tree->value, *data);
    *out = new embtree_dataset{std::move(data)};
  });
}

embtree_status embtree_dataset_shape(const embtree_dataset* dataset, size_t* rows, size_t* dim) {
  return Guard([&] {
    Require(dataset && rows && dim, "null argument");
    *rows = dataset->value->embeddings.rows();
    *dim = dataset->value->embeddings.dim();
  });
}

void embtree_dataset_free(embtree_dataset* dataset) { delete dataset; }

void embtree_build_options_init(embtree_build_options* options) {
  if (!options) return;
  const embtree::BuildOptions defaults;
  options->bin_count = static_cast<size_t>(defaults.bin_count);
  options->min_node_size = defaults.criteria.min_node_size;
  options->max_depth = defaults.criteria.max_depth;
  options->min_side = defaults.split.min_side;
  options->parallel = 0;
}

embtree_status embtree_tree_build(const embtree_dataset* dataset,
                                  const embtree_build_options* options, embtree_tree** out) {
  return Guard([&] {
    Require(dataset && out, "null argument");
    embtree::BuildOptions build;
    if (options) {
      Require(options->bin_count >= 2 && options->bin_count <= 1000, "bin_count must be in [2, 1000]");
      Require(options->min_side >= 1, "min_side must be >= 1");
      build.bin_count = static_cast<int>(options->bin_count);
      build.criteria.min_node_size = options->min_node_size;
      build.criteria.max_depth = options->max_depth;
      build.split.min_side = options->min_side;
      build.parallel = options->parallel != 0;
    }
    auto tree = std::make_shared<embtree::EmbeddingTree>(embtree::BuildTree(*dataset->value, build));
    *out = new embtree_tree{std::move(tree)};
  });
}

embtree_status embtree_tree_from_json(const char* json, size_t length, embtree_tree** out) {
  return Guard([&] {
    Require(json && out, "null argument");
    auto tree = std::make_shared<embtree::EmbeddingTree>(
        embtree::DeserializeTree(std::string_view(json, length)));
    *out = new embtree_tree{std::move(tree)};
  });
}

embtree_status embtree_tree_to_json(const embtree_tree* tree, char** out, size_t* length) {
  return Guard([&] {
    Require(tree && out, "null argument");
    *out = CopyString(embtree::SerializeTree(*tree->value), length);
  });
}

embtree_status embtree_tree_load(const char* path, embtree_tree** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw embtree::Error(embtree::ErrorCode::kIo, std::string("cannot open ") + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto tree = std::make_shared<embtree::EmbeddingTree>(embtree::DeserializeTree(text));
    *out = new embtree_tree{std::move(tree)};
  });
}

embtree_status embtree_tree_save(const embtree_tree* tree, const char* path) {
  return Guard([&] {
    Require(tree && path, "null argument");
    const std::string text = embtree::SerializeTree(*tree->value);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw embtree::Error(embtree::ErrorCode::kIo, std::string("cannot open ") + path);
    os << text;
    if (!os.flush()) throw embtree::Error(embtree::ErrorCode::kIo, std::string("cannot write ") + path);
  });
}

embtree_status embtree_tree_summary_get(const embtree_tree* tree, embtree_tree_summary* out) {
  return Guard([&] {
    Require(tree && out, "null argument");
    const auto& t = *tree->value;
    out->entities = t.entity_count();
    out->dim = t.dim();
    out->features = t.features.size();
    out->nodes = t.nodes.size();
    out->leaves = t.leaf_count();
    out->depth = t.depth();
  });
}

void embtree_tree_free(embtree_tree* tree) { delete tree; }

embtree_status embtree_diagnose_leaf_json(const embtree_tree* tree, const embtree_dataset* dataset,
                                          size_t leaf_id, char** out) {
  return Guard([&] {
    Require(tree && dataset && out, "null argument");
    const auto report = embtree::DiagnoseLeaf(*tree->value, dataset->value->embeddings, leaf_id);
    *out = CopyString(embtree::ReportJson(report).dump());
  });
}

embtree_status embtree_diagnose_all_jsonl(const embtree_tree* tree, const embtree_dataset* dataset,
                                          char** out) {
  return Guard([&] {
    Require(tree && dataset && out, "null argument");
    std::string lines;
    for (std::size_t id : embtree::DiagnosableLeaves(*tree->value)) {
      const auto report = embtree::DiagnoseLeaf(*tree->value, dataset->value->embeddings, id);
      lines += embtree::ReportJson(report).dump();
      lines += '\n';
    }
    *out = CopyString(lines);
  });
}

embtree_status embtree_infer_json(const embtree_tree* tree, const char* features_json, char** out) {
  return Guard([&] {
    Require(tree && features_json && out, "null argument");
    const auto features = embtree::ParseAssignment(features_json);
    const auto result = embtree::ColdStartEmbed(*tree->value, features);
    *out = CopyString(embtree::ColdStartJson(*tree->value, result).dump());
  });
}

embtree_status embtree_server_create(const char* cors_origin, embtree_server** out) {
  return Guard([&] {
    Require(out != nullptr, "null argument");
    *out = new embtree_server(cors_origin ? cors_origin : "*");
  });
}

embtree_status embtree_server_load(embtree_server* server, const embtree_tree* tree,
                                   const embtree_dataset* dataset) {
  return Guard([&] {
    Require(server && tree && dataset, "null argument");
    server->server.api().Load(embtree::Session::Open(tree->value, dataset->value));
  });
}

embtree_status embtree_server_bind(embtree_server* server, const char* host, int port,
                                   int* bound_port) {
  return Guard([&] {
    Require(server && host, "null argument");
    Require(port >= 0 && port <= 65535, "port must be in [0, 65535]");
    const int bound = server->server.Bind(host, port);
    if (bound_port) *bound_port = bound;
  });
}

embtree_status embtree_server_run(embtree_server* server) {
  return Guard([&] {
    Require(server != nullptr, "null argument");
    server->server.Run();
  });
}

void embtree_server_stop(embtree_server* server) {
  if (server) server->server.Stop();
}

void embtree_server_free(embtree_server* server) { delete server; }

}  // extern "C"
