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

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

#include "embtree/error.hpp"
#include "embtree/tree.hpp"
#include "json.hpp"

namespace embtree {
namespace {

using nlohmann::json;

// Minimal append-only JSON emitter. nlohmann::json prints the shortest
// round-trip form; the tree format pins 17 significant digits instead.
class Writer {
 public:
  std::string take() { return std::move(out_); }

  void BeginObject() { Value(); out_ += '{'; first_ = true; }
  void EndObject() { out_ += '}'; first_ = false; }
  void BeginArray() { Value(); out_ += '['; first_ = true; }
  void EndArray() { out_ += ']'; first_ = false; }

  void Key(std::string_view key) {
    if (!first_) out_ += ',';
    out_ += json(std::string(key)).dump();
    out_ += ':';
    after_key_ = true;
  }

  void Number(double v) {
    Value();
    if (!std::isfinite(v)) {
      out_ += "null";
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out_ += buf;
  }
  void Integer(std::uint64_t v) { Value(); out_ += std::to_string(v); }
  void String(std::string_view s) { Value(); out_ += json(std::string(s)).dump(); }
  void Bool(bool b) { Value(); out_ += b ? "true" : "false"; }
  void Null() { Value(); out_ += "null"; }

 private:
  void Value() {
    if (after_key_) {
      after_key_ = false;
    } else if (!first_) {
      out_ += ',';
    }
    first_ = false;
  }

  std::string out_;
  bool first_ = true;
  bool after_key_ = false;
};

void WriteNode(Writer& w, const EmbeddingTree& tree, const TreeNode& node) {
  w.BeginObject();
  w.Key("id"); w.Integer(node.id);
  w.Key("kind"); w.String(node.is_leaf() ? "leaf" : "internal");
  w.Key("count"); w.Integer(node.count);
  w.Key("depth"); w.Integer(node.depth);
  w.Key("split");
  if (node.split) {
    const SplitEvaluation& e = *node.split;
    w.BeginObject();
    w.Key("feature"); w.Integer(e.feature_index);
    w.Key("evaluation");
    w.BeginObject();
    w.Key("s"); w.Integer(e.s);
    w.Key("mu1"); w.Number(e.mu1);
    w.Key("var1"); w.Number(e.var1);
    w.Key("mu2"); w.Number(e.mu2);
    w.Key("var2"); w.Number(e.var2);
    w.Key("w1"); w.Number(e.w1);
    w.Key("w2"); w.Number(e.w2);
    w.Key("loglik"); w.Number(e.log_likelihood);
    w.EndObject();
    w.EndObject();
  } else {
    w.Null();
  }
  w.Key("left");
  if (node.is_leaf()) w.Null(); else WriteNode(w, tree, tree.nodes[node.left]);
  w.Key("right");
  if (node.is_leaf()) w.Null(); else WriteNode(w, tree, tree.nodes[node.right]);
  w.Key("entities");
  if (node.is_leaf()) {
    w.BeginArray();
    for (std::size_t e : node.entities) w.Integer(e);
    w.EndArray();
  } else {
    w.Null();
  }
  w.Key("mean");
  w.BeginArray();
  for (double m : node.mean) w.Number(m);
  w.EndArray();
  w.EndObject();
}

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kSchema, "malformed tree JSON: " + what);
}

const json& Field(const json& obj, const char* key) {
  if (!obj.is_object()) Malformed(std::string("expected object holding '") + key + "'");
  auto it = obj.find(key);
  if (it == obj.end()) Malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::size_t Size(const json& obj, const char* key) {
  const json& v = Field(obj, key);
  if (!v.is_number_unsigned()) Malformed(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double Real(const json& obj, const char* key) {
  const json& v = Field(obj, key);
  if (!v.is_number()) Malformed(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::string Text(const json& obj, const char* key) {
  const json& v = Field(obj, key);
  if (!v.is_string()) Malformed(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

double EdgeOr(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number()) Malformed(std::string("'") + key + "' must be a number or null");
  return it->get<double>();
}

}  // namespace

std::string SerializeTree(const EmbeddingTree& tree) {
  if (tree.nodes.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree");
  const TreeParams& p = tree.params;
  Writer w;
  w.BeginObject();
  w.Key("version"); w.Integer(kTreeFormatVersion);
  w.Key("params");
  w.BeginObject();
  w.Key("min_node_size"); w.Integer(p.criteria.min_node_size);
  w.Key("max_depth"); w.Integer(p.criteria.max_depth);
  w.Key("bin_count"); w.Integer(static_cast<std::uint64_t>(p.bin_count));
  w.Key("min_side"); w.Integer(p.min_side);
  w.Key("variance_floor_scale"); w.Number(p.floor_scale);
  w.Key("binning");
  w.BeginObject();
  for (const auto& [name, binning] : p.binning.numeric) {
    w.Key(name);
    w.BeginObject();
    w.Key("boundaries");
    w.BeginArray();
    for (double b : binning.boundaries) w.Number(b);
    w.EndArray();
    w.Key("constant"); w.Bool(binning.constant);
    w.EndObject();
  }
  w.EndObject();
  w.Key("schema");
  w.BeginObject();
  for (const auto& [name, kind] : p.schema) {
    w.Key(name);
    w.String(FeatureKindName(kind));
  }
  w.EndObject();
  w.EndObject();
  w.Key("fingerprint"); w.String(tree.fingerprint);
  w.Key("features");
  w.BeginArray();
  for (const auto& f : tree.features) {
    w.BeginObject();
    w.Key("name"); w.String(f.source);
    w.Key("kind"); w.String(PredicateKindName(f.kind));
    w.Key("predicate"); w.String(f.predicate);
    if (f.kind == PredicateKind::kCategoricalEquals) {
      w.Key("value"); w.String(f.value);
    } else {
      w.Key("bin"); w.Integer(static_cast<std::uint64_t>(f.bin));
      w.Key("low"); w.Number(f.low);
      w.Key("high"); w.Number(f.high);
    }
    w.EndObject();
  }
  w.EndArray();
  w.Key("root");
  WriteNode(w, tree, tree.root());
  w.EndObject();
  std::string out = w.take();
  out += '\n';
  return out;
}

EmbeddingTree DeserializeTree(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    Malformed(e.what());
  }
  if (!doc.is_object()) Malformed("top level must be an object");
  const json& version = Field(doc, "version");
  if (!version.is_number_integer() || version.get<long long>() != kTreeFormatVersion) {
    throw Error(ErrorCode::kSchema, "tree schema version mismatch: expected " +
                                        std::to_string(kTreeFormatVersion) + ", got " +
                                        version.dump());
  }

  EmbeddingTree tree;
  const json& params = Field(doc, "params");
  TreeParams& p = tree.params;
  p.criteria.min_node_size = Size(params, "min_node_size");
  p.criteria.max_depth = Size(params, "max_depth");
  p.bin_count = static_cast<int>(Size(params, "bin_count"));
  p.binning.bin_count = p.bin_count;
  p.min_side = Size(params, "min_side");
  p.floor_scale = Real(params, "variance_floor_scale");
  const json& binning = Field(params, "binning");
  if (!binning.is_object()) Malformed("'binning' must be an object");
  for (const auto& [name, entry] : binning.items()) {
    NumericBinning nb;
    const json& bounds = Field(entry, "boundaries");
    if (!bounds.is_array()) Malformed("'boundaries' must be an array");
    for (const auto& b : bounds) {
      if (!b.is_number()) Malformed("boundary must be a number");
      nb.boundaries.push_back(b.get<double>());
    }
    const json& constant = Field(entry, "constant");
    if (!constant.is_boolean()) Malformed("'constant' must be a boolean");
    nb.constant = constant.get<bool>();
    p.binning.numeric.emplace(name, std::move(nb));
  }
  const json& schema = Field(params, "schema");
  if (!schema.is_object()) Malformed("'schema' must be an object");
  for (const auto& [name, kind] : schema.items()) {
    auto parsed = kind.is_string() ? ParseFeatureKind(kind.get<std::string>()) : std::nullopt;
    if (!parsed) Malformed("bad schema kind for " + name);
    p.schema.emplace(name, *parsed);
  }

  tree.fingerprint = Text(doc, "fingerprint");

  const json& features = Field(doc, "features");
  if (!features.is_array()) Malformed("'features' must be an array");
  for (const auto& f : features) {
    FeatureDescriptor d;
    d.source = Text(f, "name");
    auto kind = ParsePredicateKind(Text(f, "kind"));
    if (!kind) Malformed("unknown feature kind");
    d.kind = *kind;
    d.predicate = Text(f, "predicate");
    if (d.kind == PredicateKind::kCategoricalEquals) {
      d.value = Text(f, "value");
    } else {
      d.bin = static_cast<int>(Size(f, "bin"));
      d.low = EdgeOr(f, "low", -std::numeric_limits<double>::infinity());
      d.high = EdgeOr(f, "high", std::numeric_limits<double>::infinity());
    }
    tree.features.push_back(std::move(d));
  }

  // Breadth-first walk; ids must come out in visiting order.
  std::deque<const json*> queue{&Field(doc, "root")};
  while (!queue.empty()) {
    const json& j = *queue.front();
    queue.pop_front();
    TreeNode node;
    node.id = Size(j, "id");
    if (node.id != tree.nodes.size()) Malformed("node ids are not breadth-first");
    node.count = Size(j, "count");
    node.depth = Size(j, "depth");
    const std::string kind = Text(j, "kind");
    const json& mean = Field(j, "mean");
    if (!mean.is_array()) Malformed("'mean' must be an array");
    for (const auto& m : mean) {
      if (!m.is_number()) Malformed("mean entry must be a number");
      node.mean.push_back(m.get<double>());
    }
    if (kind == "internal") {
      const json& split = Field(j, "split");
      const json& ev = Field(split, "evaluation");
      SplitEvaluation e;
      e.feature_index = Size(split, "feature");
      if (e.feature_index >= tree.features.size()) Malformed("split feature out of range");
      e.s = Size(ev, "s");
      if (e.s > node.count) Malformed("split size exceeds node count");
      e.n_minus_s = node.count - e.s;
      e.mu1 = Real(ev, "mu1");
      e.var1 = Real(ev, "var1");
      e.mu2 = Real(ev, "mu2");
      e.var2 = Real(ev, "var2");
      e.w1 = Real(ev, "w1");
      e.w2 = Real(ev, "w2");
      e.log_likelihood = Real(ev, "loglik");
      e.valid = true;
      node.split = e;
      const std::size_t base = tree.nodes.size() + queue.size();
      node.left = base + 1;
      node.right = base + 2;
      queue.push_back(&Field(j, "left"));
      queue.push_back(&Field(j, "right"));
    } else if (kind == "leaf") {
      const json& entities = Field(j, "entities");
      if (!entities.is_array()) Malformed("leaf 'entities' must be an array");
      for (const auto& e : entities) {
        if (!e.is_number_unsigned()) Malformed("entity index must be a non-negative integer");
        node.entities.push_back(e.get<std::size_t>());
      }
      if (node.entities.size() != node.count) Malformed("leaf count does not match entities");
    } else {
      Malformed("unknown node kind '" + kind + "'");
    }
    tree.nodes.push_back(std::move(node));
  }

  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    const auto& l = tree.nodes[node.left];
    const auto& r = tree.nodes[node.right];
    if (l.count + r.count != node.count || l.count != node.split->s) {
      Malformed("child counts do not partition node " + std::to_string(node.id));
    }
  }
  return tree;
}

}  // namespace embtree
