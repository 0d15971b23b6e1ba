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

#include "embtree/tree.hpp"

#include <algorithm>
#include <deque>
#include <future>
#include <memory>

#include "embtree/error.hpp"

namespace embtree {
namespace {

// Subtrees at least this large, and shallower than kMaxParallelDepth, build
// their left child on another thread.
constexpr std::size_t kParallelMinRows = 1024;
constexpr std::size_t kMaxParallelDepth = 4;

struct BuildNode {
  std::size_t depth = 0;
  std::vector<std::size_t> rows;
  std::vector<double> mean;
  std::optional<SplitEvaluation> split;
  std::unique_ptr<BuildNode> left, right;
};

class Builder {
 public:
  Builder(const EmbeddingMatrix& embeddings, const BinaryFeatureMatrix& matrix,
          const BuildOptions& options)
      : embeddings_(embeddings), matrix_(matrix), options_(options) {}

  std::unique_ptr<BuildNode> Build(std::vector<std::size_t> rows, std::size_t depth) const {
    auto node = std::make_unique<BuildNode>();
    node->depth = depth;
    node->rows = std::move(rows);
    node->mean = Mean(node->rows);

    const auto& criteria = options_.criteria;
    if (node->rows.size() < criteria.min_node_size || depth >= criteria.max_depth) {
      return node;
    }
    const auto active = ActiveFeatures(matrix_, node->rows);
    if (active.empty()) return node;

    const PrincipalProjection projection =
        ProjectRows(embeddings_.vectors, node->rows, 1, options_.projection);
    const Eigen::VectorXd scores = projection.scores.col(0);
    SplitOptions split_options = options_.split;
    split_options.parallel = options_.parallel;
    auto best = BestSplit(std::span<const double>(scores.data(), node->rows.size()),
                          matrix_, node->rows, active, split_options);
    if (!best) return node;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(best->s);
    right_rows.reserve(best->n_minus_s);
    const auto& column = matrix_.columns[best->feature_index];
    for (std::size_t r : node->rows) {
      (column[r] ? right_rows : left_rows).push_back(r);
    }
    node->split = *best;

    const bool fork = options_.parallel && node->rows.size() >= kParallelMinRows &&
                      depth < kMaxParallelDepth;
    if (fork) {
      auto left = std::async(std::launch::async, [this, &left_rows, depth] {
        return Build(std::move(left_rows), depth + 1);
      });
      node->right = Build(std::move(right_rows), depth + 1);
      node->left = left.get();
    } else {
      node->left = Build(std::move(left_rows), depth + 1);
      node->right = Build(std::move(right_rows), depth + 1);
    }
    return node;
  }

 private:
  std::vector<double> Mean(const std::vector<std::size_t>& rows) const {
    const std::size_t p = embeddings_.dim();
    std::vector<double> mean(p, 0.0);
    for (std::size_t r : rows) {
      const auto row = embeddings_.vectors.row(static_cast<Eigen::Index>(r));
      for (std::size_t d = 0; d < p; ++d) mean[d] += row[static_cast<Eigen::Index>(d)];
    }
    for (double& m : mean) m /= static_cast<double>(rows.size());
    return mean;
  }

  const EmbeddingMatrix& embeddings_;
  const BinaryFeatureMatrix& matrix_;
  const BuildOptions& options_;
};

std::vector<TreeNode> Flatten(std::unique_ptr<BuildNode> root) {
  std::vector<TreeNode> nodes;
  std::deque<std::unique_ptr<BuildNode>> queue;
  queue.push_back(std::move(root));
  std::size_t next_id = 1;
  while (!queue.empty()) {
    std::unique_ptr<BuildNode> b = std::move(queue.front());
    queue.pop_front();
    TreeNode node;
    node.id = nodes.size();
    node.depth = b->depth;
    node.count = b->rows.size();
    node.mean = std::move(b->mean);
    node.split = b->split;
    if (b->split) {
      node.left = next_id++;
      node.right = next_id++;
      queue.push_back(std::move(b->left));
      queue.push_back(std::move(b->right));
    } else {
      node.entities = std::move(b->rows);
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

}  // namespace

void StoppingCriteria::Validate() const {
  if (min_node_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "min_node_size must be >= 2");
  }
}

const TreeNode& EmbeddingTree::node(std::size_t id) const {
  if (id >= nodes.size()) {
    throw Error(ErrorCode::kNotFound, "unknown node id " + std::to_string(id));
  }
  return nodes[id];
}

std::size_t EmbeddingTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t EmbeddingTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::vector<std::size_t> EmbeddingTree::Members(std::size_t id) const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{node(id).id};
  while (!stack.empty()) {
    const TreeNode& n = nodes[stack.back()];
    stack.pop_back();
    if (n.is_leaf()) {
      out.insert(out.end(), n.entities.begin(), n.entities.end());
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> ActiveFeatures(const BinaryFeatureMatrix& matrix,
                                        std::span<const std::size_t> rows) {
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < matrix.cols(); ++k) {
    const auto& column = matrix.columns[k];
    std::size_t ones = 0;
    for (std::size_t r : rows) ones += column[r];
    if (ones != 0 && ones != rows.size()) active.push_back(k);
  }
  return active;
}

EmbeddingTree BuildTree(const EmbeddingMatrix& embeddings,
                        const Binarization& features, const BuildOptions& options) {
  options.criteria.Validate();
  const std::size_t n = embeddings.rows();
  if (n == 0) throw Error(ErrorCode::kValidation, "empty dataset");
  if (features.matrix.rows != n) {
    throw Error(ErrorCode::kValidation, "feature matrix has " +
                                            std::to_string(features.matrix.rows) +
                                            " rows, embeddings have " + std::to_string(n));
  }

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Builder builder(embeddings, features.matrix, options);

  EmbeddingTree tree;
  tree.params.criteria = options.criteria;
  tree.params.bin_count = options.bin_count;
  tree.params.min_side = options.split.min_side;
  tree.params.floor_scale = options.split.floor_scale;
  tree.params.binning = features.spec;
  tree.features = features.matrix.descriptors;
  tree.nodes = Flatten(builder.Build(std::move(all), 0));
  return tree;
}

EmbeddingTree BuildTree(const Dataset& dataset, const BuildOptions& options) {
  const Binarization features = Binarize(dataset.features, options.bin_count);
  EmbeddingTree tree = BuildTree(dataset.embeddings, features, options);
  tree.params.schema = SchemaOf(dataset.features);
  tree.fingerprint = Fingerprint(dataset);
  return tree;
}

void VerifyFingerprint(const EmbeddingTree& tree, const Dataset& dataset) {
  const std::string actual = Fingerprint(dataset);
  if (actual != tree.fingerprint) {
    throw Error(ErrorCode::kFingerprint, "dataset fingerprint " + actual.substr(0, 12) +
                                             "... does not match tree fingerprint " +
                                             tree.fingerprint.substr(0, 12) + "...");
  }
}

}  // namespace embtree
