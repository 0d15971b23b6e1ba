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

#include "embtree/json_views.hpp"

#include "embtree/error.hpp"

namespace embtree {

using nlohmann::json;

namespace {

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json TopologyNode(const EmbeddingTree& tree, const TreeNode& node) {
  json out = {{"id", node.id},
              {"kind", node.is_leaf() ? "leaf" : "internal"},
              {"count", node.count},
              {"depth", node.depth}};
  if (node.is_leaf()) {
    out["split"] = nullptr;
    out["left"] = nullptr;
    out["right"] = nullptr;
  } else {
    const auto& e = *node.split;
    const auto& f = tree.features[e.feature_index];
    out["split"] = {{"feature", e.feature_index},
                    {"name", f.source},
                    {"predicate", f.predicate},
                    {"loglik", e.log_likelihood}};
    out["left"] = TopologyNode(tree, tree.nodes[node.left]);
    out["right"] = TopologyNode(tree, tree.nodes[node.right]);
  }
  return out;
}

}  // namespace

json ReportJson(const ConsistencyReport& r) {
  return {{"leaf_id", r.leaf_id},
          {"verdict", r.consistent ? "consistent" : "inconsistent"},
          {"count", r.count},
          {"cluster_count_estimate", r.cluster_count_estimate},
          {"evidence",
           {{"single_loglik", r.single_loglik},
            {"split_loglik", OptionalNumber(r.split_loglik)},
            {"delta_loglik", r.delta_loglik},
            {"penalty", r.penalty},
            {"statistic", r.statistic},
            {"cut", OptionalNumber(r.cut)},
            {"left_count", r.left_count},
            {"right_count", r.cut ? r.count - r.left_count : 0}}}};
}

json ColdStartJson(const EmbeddingTree& tree, const ColdStartResult& result) {
  json path = json::array();
  for (const auto& step : result.path) {
    const auto& f = tree.features[step.feature_index];
    path.push_back({{"node", step.node_id},
                    {"feature", step.feature_index},
                    {"name", f.source},
                    {"predicate", f.predicate},
                    {"branch", step.bit ? 1 : 0}});
  }
  return {{"leaf_id", result.leaf_id}, {"embedding", result.embedding}, {"path", path}};
}

json TopologyJson(const EmbeddingTree& tree) {
  json features = json::array();
  for (std::size_t k = 0; k < tree.features.size(); ++k) {
    const auto& f = tree.features[k];
    features.push_back({{"index", k},
                        {"name", f.source},
                        {"kind", PredicateKindName(f.kind)},
                        {"predicate", f.predicate}});
  }
  return {{"fingerprint", tree.fingerprint},
          {"entity_count", tree.entity_count()},
          {"dim", tree.dim()},
          {"node_count", tree.nodes.size()},
          {"features", features},
          {"root", TopologyNode(tree, tree.root())}};
}

FeatureAssignment ParseAssignment(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("feature JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "feature JSON must be an object");
  FeatureAssignment out;
  for (const auto& [name, value] : doc.items()) {
    if (value.is_string()) {
      out.emplace(name, value.get<std::string>());
    } else if (value.is_number()) {
      out.emplace(name, value.get<double>());
    } else {
      throw Error(ErrorCode::kParse, "feature '" + name + "' must be a string or number");
    }
  }
  return out;
}

}  // namespace embtree
