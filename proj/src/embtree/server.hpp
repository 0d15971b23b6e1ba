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

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "embtree/dataset.hpp"
#include "embtree/tree.hpp"

namespace embtree {

// A built tree with the data it was built from. Immutable apart from the
// lazily filled projection cache.
class Session {
 public:
  // Verifies that `dataset` matches the tree fingerprint.
  static std::shared_ptr<const Session> Open(std::shared_ptr<const EmbeddingTree> tree,
                                             std::shared_ptr<const Dataset> dataset);

  const EmbeddingTree& tree() const { return *tree_; }
  const Dataset& dataset() const { return *dataset_; }

  // 2D principal coordinates of a node's members, rows in Members(id) order.
  // Concurrent first requests may both compute; the stored result is
  // identical either way.
  std::shared_ptr<const RowMatrix> NodeProjection(std::size_t id) const;

 private:
  Session(std::shared_ptr<const EmbeddingTree> tree, std::shared_ptr<const Dataset> dataset)
      : tree_(std::move(tree)), dataset_(std::move(dataset)) {}

  std::shared_ptr<const EmbeddingTree> tree_;
  std::shared_ptr<const Dataset> dataset_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const RowMatrix>> projections_;
};

struct ApiResponse {
  int status = 200;
  std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

// Transport-independent request routing for the explorer API.
class Api {
 public:
  void Load(std::shared_ptr<const Session> session);
  std::shared_ptr<const Session> session() const;

  ApiResponse Handle(std::string_view method, std::string_view path,
                     const QueryParams& query, std::string_view body) const;

 private:
  ApiResponse Tree(const Session& s) const;
  ApiResponse Projection(const Session& s, std::size_t id) const;
  ApiResponse Entities(const Session& s, std::size_t id, const QueryParams& query) const;
  ApiResponse Diagnosis(const Session& s, std::size_t id) const;
  ApiResponse Infer(const Session& s, std::string_view body) const;

  mutable std::mutex mutex_;
  std::shared_ptr<const Session> session_;
};

class HttpServer {
 public:
  explicit HttpServer(std::string cors_origin = "*");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  Api& api() { return api_; }

  // Port 0 binds any free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  void Run();
  void Stop();

 private:
  struct Impl;
  Api api_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace embtree
