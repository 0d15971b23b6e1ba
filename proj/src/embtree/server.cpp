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

#include "embtree/server.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "embtree/analysis.hpp"
#include "embtree/error.hpp"
#include "embtree/json_views.hpp"
#include "embtree/projection.hpp"
#include "httplib.h"
#include "json.hpp"

namespace embtree {
namespace {

using nlohmann::json;

constexpr std::size_t kDefaultLimit = 100;
constexpr std::size_t kMaxLimit = 10000;

ApiResponse Json(int status, const json& body) { return {status, body.dump()}; }

ApiResponse Fail(int status, const std::string& message) {
  return Json(status, {{"error", message}});
}

std::optional<std::size_t> ParseIndex(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

const std::string* QueryValue(const QueryParams& query, const char* key) {
  auto it = query.find(key);
  return it == query.end() ? nullptr : &it->second;
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kMissingFeature: return 422;
    case ErrorCode::kValidation: return 422;
    case ErrorCode::kFingerprint: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

json CellJson(const FeatureColumn& column, std::size_t row) {
  if (column.kind == FeatureKind::kNumeric) return column.numbers[row];
  return column.raw[row];
}

}  // namespace

std::shared_ptr<const Session> Session::Open(std::shared_ptr<const EmbeddingTree> tree,
                                             std::shared_ptr<const Dataset> dataset) {
  if (!tree || !dataset) throw Error(ErrorCode::kInvalidArgument, "session needs a tree and a dataset");
  VerifyFingerprint(*tree, *dataset);
  return std::shared_ptr<const Session>(new Session(std::move(tree), std::move(dataset)));
}

std::shared_ptr<const RowMatrix> Session::NodeProjection(std::size_t id) const {
  {
    std::lock_guard lock(mutex_);
    auto it = projections_.find(id);
    if (it != projections_.end()) return it->second;
  }
  const auto members = tree_->Members(id);
  const RowMatrix& vectors = dataset_->embeddings.vectors;
  auto coords = std::make_shared<RowMatrix>(RowMatrix::Zero(static_cast<Eigen::Index>(members.size()), 2));
  const int k = vectors.cols() >= 2 ? 2 : 1;
  const PrincipalProjection projection = ProjectRows(vectors, members, k);
  coords->leftCols(k) = projection.scores;

  std::lock_guard lock(mutex_);
  auto [it, inserted] = projections_.emplace(id, std::move(coords));
  return it->second;
}

void Api::Load(std::shared_ptr<const Session> session) {
  std::lock_guard lock(mutex_);
  session_ = std::move(session);
}

std::shared_ptr<const Session> Api::session() const {
  std::lock_guard lock(mutex_);
  return session_;
}

ApiResponse Api::Handle(std::string_view method, std::string_view path,
                        const QueryParams& query, std::string_view body) const {
  const auto s = session();
  if (!s) return Fail(503, "no tree loaded");

  try {
    if (path == "/api/tree") {
      if (method != "GET") return Fail(405, "method not allowed");
      return Tree(*s);
    }
    if (path == "/api/infer") {
      if (method != "POST") return Fail(405, "method not allowed");
      return Infer(*s, body);
    }
    constexpr std::string_view kNode = "/api/node/";
    if (path.starts_with(kNode)) {
      std::string_view rest = path.substr(kNode.size());
      const auto slash = rest.find('/');
      if (slash == std::string_view::npos) return Fail(404, "unknown endpoint");
      const auto id = ParseIndex(rest.substr(0, slash));
      const std::string_view action = rest.substr(slash + 1);
      if (!id || *id >= s->tree().nodes.size()) {
        return Fail(404, "unknown node id " + std::string(rest.substr(0, slash)));
      }
      if (method != "GET") return Fail(405, "method not allowed");
      if (action == "projection") return Projection(*s, *id);
      if (action == "entities") return Entities(*s, *id, query);
      if (action == "diagnosis") return Diagnosis(*s, *id);
    }
    return Fail(404, "unknown endpoint");
  } catch (const Error& e) {
    return Fail(StatusFor(e.code()), e.what());
  } catch (const std::exception& e) {
    return Fail(500, e.what());
  }
}

ApiResponse Api::Tree(const Session& s) const { return Json(200, TopologyJson(s.tree())); }

ApiResponse Api::Projection(const Session& s, std::size_t id) const {
  const auto coords = s.NodeProjection(id);
  const auto members = s.tree().Members(id);
  json points = json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    points.push_back({{"entity_id", s.dataset().embeddings.ids[members[i]]},
                      {"x", (*coords)(r, 0)},
                      {"y", (*coords)(r, 1)}});
  }
  return Json(200, points);
}

ApiResponse Api::Entities(const Session& s, std::size_t id, const QueryParams& query) const {
  const Dataset& data = s.dataset();
  std::size_t offset = 0;
  std::size_t limit = kDefaultLimit;
  if (const auto* v = QueryValue(query, "offset")) {
    auto parsed = ParseIndex(*v);
    if (!parsed) return Fail(400, "offset must be a non-negative integer");
    offset = *parsed;
  }
  if (const auto* v = QueryValue(query, "limit")) {
    auto parsed = ParseIndex(*v);
    if (!parsed || *parsed > kMaxLimit) {
      return Fail(400, "limit must be an integer in [0, " + std::to_string(kMaxLimit) + "]");
    }
    limit = *parsed;
  }
  bool descending = false;
  if (const auto* v = QueryValue(query, "order")) {
    if (*v == "desc") {
      descending = true;
    } else if (*v != "asc") {
      return Fail(400, "order must be asc or desc");
    }
  }
  bool with_embedding = false;
  if (const auto* v = QueryValue(query, "embedding")) {
    if (*v == "true" || *v == "1") {
      with_embedding = true;
    } else if (*v != "false" && *v != "0") {
      return Fail(400, "embedding must be true or false");
    }
  }
  const FeatureColumn* sort_column = nullptr;
  bool sort_by_id = false;
  if (const auto* v = QueryValue(query, "sort_by")) {
    if (*v == "entity_id") {
      sort_by_id = true;
    } else {
      sort_column = data.features.Find(*v);
      if (!sort_column) return Fail(400, "unknown sort_by column " + *v);
    }
  }

  std::vector<std::size_t> rows = s.tree().Members(id);
  if (const auto* v = QueryValue(query, "filter"); v && !v->empty()) {
    const std::string& needle = *v;
    std::erase_if(rows, [&](std::size_t r) {
      if (data.embeddings.ids[r].find(needle) != std::string::npos) return false;
      for (const auto& column : data.features.columns) {
        if (column.raw[r].find(needle) != std::string::npos) return false;
      }
      return true;
    });
  }

  if (sort_by_id || sort_column) {
    auto less = [&](std::size_t a, std::size_t b) {
      if (sort_by_id) return data.embeddings.ids[a] < data.embeddings.ids[b];
      if (sort_column->kind == FeatureKind::kNumeric) {
        return sort_column->numbers[a] < sort_column->numbers[b];
      }
      return sort_column->raw[a] < sort_column->raw[b];
    };
    if (descending) {
      std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return less(b, a); });
    } else {
      std::stable_sort(rows.begin(), rows.end(), less);
    }
  }

  json page = json::array();
  const std::size_t begin = std::min(offset, rows.size());
  const std::size_t end = std::min(rows.size(), begin + limit);
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t r = rows[i];
    json row = {{"entity_id", data.embeddings.ids[r]}};
    for (const auto& column : data.features.columns) row[column.name] = CellJson(column, r);
    if (with_embedding) {
      const auto v = data.embeddings.vectors.row(static_cast<Eigen::Index>(r));
      row["embedding"] = std::vector<double>(v.begin(), v.end());
    }
    page.push_back(std::move(row));
  }
  return Json(200, {{"total", rows.size()}, {"offset", begin}, {"rows", page}});
}

ApiResponse Api::Diagnosis(const Session& s, std::size_t id) const {
  return Json(200, ReportJson(DiagnoseLeaf(s.tree(), s.dataset().embeddings, id)));
}

ApiResponse Api::Infer(const Session& s, std::string_view body) const {
  const FeatureAssignment features = ParseAssignment(body);
  return Json(200, ColdStartJson(s.tree(), ColdStartEmbed(s.tree(), features)));
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
  std::string cors_origin;
};

HttpServer::HttpServer(std::string cors_origin) : impl_(std::make_unique<Impl>()) {
  impl_->cors_origin = std::move(cors_origin);
  auto& server = impl_->server;
  server.set_default_headers({{"Access-Control-Allow-Origin", impl_->cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams query(req.params.begin(), req.params.end());
    const ApiResponse out = api_.Handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/api/.*)", dispatch);
  server.Post(R"(/api/.*)", dispatch);
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  auto& server = impl_->server;
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::Run() { impl_->server.listen_after_bind(); }

void HttpServer::Stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace embtree
