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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embtree/dataset.hpp"
#include "embtree/projection.hpp"
#include "embtree/split.hpp"

namespace embtree {

// A node is split only while it holds at least min_node_size entities and
// sits above max_depth.
struct StoppingCriteria {
  std::size_t min_node_size = 20;
  std::size_t max_depth = 10;

  void Validate() const;
  bool operator==(const StoppingCriteria&) const = default;
};

struct BuildOptions {
  StoppingCriteria criteria;
  int bin_count = 3;
  SplitOptions split;
  ProjectionOptions projection;
  // Build sibling subtrees and score features on worker threads. The result
  // is identical to the sequential build.
  bool parallel = false;
};

// Everything needed to reproduce a build and to route new entities.
struct TreeParams {
  StoppingCriteria criteria;
  int bin_count = 3;
  std::size_t min_side = 1;
  double floor_scale = 1e-12;
  BinningSpec binning;
  Schema schema;

  bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
  std::size_t id = 0;
  std::size_t depth = 0;
  std::size_t count = 0;
  // Set on internal nodes; split->feature_index names the feature.
  std::optional<SplitEvaluation> split;
  std::size_t left = 0;   // child id holding bit 0
  std::size_t right = 0;  // child id holding bit 1
  std::vector<std::size_t> entities;  // leaves only, ascending
  std::vector<double> mean;

  bool is_leaf() const { return !split.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

// Node ids are breadth-first; nodes[id].id == id and nodes[0] is the root.
struct EmbeddingTree {
  TreeParams params;
  std::string fingerprint;
  std::vector<FeatureDescriptor> features;
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  const TreeNode& node(std::size_t id) const;
  std::size_t entity_count() const { return nodes.empty() ? 0 : root().count; }
  std::size_t dim() const { return nodes.empty() ? 0 : root().mean.size(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;
  // Entities under `id`, ascending.
  std::vector<std::size_t> Members(std::size_t id) const;

  bool operator==(const EmbeddingTree&) const = default;
};

EmbeddingTree BuildTree(const EmbeddingMatrix& embeddings,
                        const Binarization& features, const BuildOptions& options);

// Binarizes and fingerprints `dataset`, then builds.
EmbeddingTree BuildTree(const Dataset& dataset, const BuildOptions& options = {});

// Active features at a node: those not constant over `rows`.
std::vector<std::size_t> ActiveFeatures(const BinaryFeatureMatrix& matrix,
                                        std::span<const std::size_t> rows);

// Throws kFingerprint unless `dataset` is the data the tree was built from.
void VerifyFingerprint(const EmbeddingTree& tree, const Dataset& dataset);

inline constexpr int kTreeFormatVersion = 1;

std::string SerializeTree(const EmbeddingTree& tree);
EmbeddingTree DeserializeTree(std::string_view json);

}  // namespace embtree
