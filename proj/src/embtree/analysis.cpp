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

#include "embtree/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "embtree/error.hpp"
#include "embtree/projection.hpp"
#include "embtree/split.hpp"

namespace embtree {
namespace {

double GaussianLogLik(double n, double var, double floor) {
  return -0.5 * n * std::log(2.0 * std::numbers::pi * std::max(var, floor));
}

double Variance(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size());
}

double SplitLogLik(std::span<const double> a, std::span<const double> b, double floor) {
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  return GaussianLogLik(n1, Variance(a), floor) + GaussianLogLik(n2, Variance(b), floor) +
         n1 * std::log(n1 / n) + n2 * std::log(n2 / n);
}

}  // namespace

ConsistencyReport DiagnoseScores(std::span<const double> scores,
                                 const DiagnosisOptions& options) {
  ConsistencyReport report;
  const std::size_t n = scores.size();
  report.count = n;
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "cannot diagnose an empty leaf");

  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double floor = VarianceFloor(sorted, options.floor_scale);
  report.single_loglik = GaussianLogLik(static_cast<double>(n), Variance(sorted), floor);
  report.penalty = 1.5 * std::log(static_cast<double>(n));

  // Prefix sums of centered scores make each cut O(1); the winner is then
  // rescored with two-pass variances.
  const double center = sorted[n / 2];
  std::vector<double> sum(n + 1, 0.0), sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted[i] - center;
    sum[i + 1] = sum[i] + x;
    sq[i + 1] = sq[i] + x * x;
  }
  auto var_of = [&](std::size_t lo, std::size_t hi) {
    const double m = static_cast<double>(hi - lo);
    const double mean = (sum[hi] - sum[lo]) / m;
    return std::max(0.0, (sq[hi] - sq[lo]) / m - mean * mean);
  };

  const std::size_t min_group = std::max<std::size_t>(options.min_group, 1);
  std::optional<std::size_t> best_cut;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = min_group; s + min_group <= n; ++s) {
    // Only cuts expressible as a threshold: no tie straddles the cut.
    if (sorted[s - 1] == sorted[s]) continue;
    const double n1 = static_cast<double>(s);
    const double n2 = static_cast<double>(n - s);
    const double total = static_cast<double>(n);
    const double ll = GaussianLogLik(n1, var_of(0, s), floor) +
                      GaussianLogLik(n2, var_of(s, n), floor) + n1 * std::log(n1 / total) +
                      n2 * std::log(n2 / total);
    if (ll > best) {
      best = ll;
      best_cut = s;
    }
  }
  if (!best_cut) return report;

  const std::size_t s = *best_cut;
  const std::span<const double> all(sorted);
  report.split_loglik = SplitLogLik(all.first(s), all.subspan(s), floor);
  report.delta_loglik = *report.split_loglik - report.single_loglik;
  report.statistic = report.delta_loglik - report.penalty;
  report.cut = 0.5 * (sorted[s - 1] + sorted[s]);
  report.left_count = s;
  report.consistent = !(report.statistic > 0.0);
  report.cluster_count_estimate = report.consistent ? 1 : 2;
  return report;
}

std::vector<std::size_t> DiagnosableLeaves(const EmbeddingTree& tree) {
  std::vector<std::size_t> out;
  const std::size_t minimum = 2 * std::max<std::size_t>(tree.params.min_side, 1);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf() && node.count >= minimum) out.push_back(node.id);
  }
  return out;
}

ConsistencyReport DiagnoseLeaf(const EmbeddingTree& tree,
                               const EmbeddingMatrix& embeddings, std::size_t leaf_id,
                               const DiagnosisOptions& options) {
  const TreeNode& leaf = tree.node(leaf_id);
  if (!leaf.is_leaf()) {
    throw Error(ErrorCode::kInvalidArgument, "node " + std::to_string(leaf_id) + " is not a leaf");
  }
  const std::size_t min_side = std::max<std::size_t>(tree.params.min_side, 1);
  if (leaf.count < 2 * min_side) {
    throw Error(ErrorCode::kValidation, "leaf " + std::to_string(leaf_id) +
                                            " too small to diagnose (" +
                                            std::to_string(leaf.count) + " entities)");
  }
  for (std::size_t e : leaf.entities) {
    if (e >= embeddings.rows()) {
      throw Error(ErrorCode::kValidation, "leaf entity index outside the dataset");
    }
  }
  const PrincipalProjection projection =
      ProjectRows(embeddings.vectors, leaf.entities, 1);
  const Eigen::VectorXd scores = projection.scores.col(0);
  DiagnosisOptions effective = options;
  effective.min_group = std::max(options.min_group, min_side);
  ConsistencyReport report = DiagnoseScores(
      std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
      effective);
  report.leaf_id = leaf_id;
  return report;
}

bool FeatureBit(const EmbeddingTree& tree, const FeatureDescriptor& feature,
                const FeatureValue& value) {
  if (feature.kind == PredicateKind::kCategoricalEquals) {
    const auto kind = tree.params.schema.find(feature.source);
    const bool numeric_source =
        kind != tree.params.schema.end() && kind->second == FeatureKind::kNumeric;
    const auto* text = std::get_if<std::string>(&value);
    // Categorical cells match by exact text, as in training.
    if (text && !numeric_source) return *text == feature.value;
    const auto number = text ? ParseDouble(*text) : std::optional<double>(std::get<double>(value));
    if (!number) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature " + feature.source + " needs a numeric value, got '" + *text + "'");
    }
    const auto expected = ParseDouble(feature.value);
    return expected && *expected == *number;
  }

  double number = 0.0;
  if (const auto* text = std::get_if<std::string>(&value)) {
    const auto parsed = ParseDouble(*text);
    if (!parsed || !std::isfinite(*parsed)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature " + feature.source + " needs a numeric value, got '" + *text + "'");
    }
    number = *parsed;
  } else {
    number = std::get<double>(value);
  }
  const auto it = tree.params.binning.numeric.find(feature.source);
  if (it == tree.params.binning.numeric.end()) {
    throw Error(ErrorCode::kSchema, "tree has no bin boundaries for " + feature.source);
  }
  return AssignBin(number, it->second) == feature.bin;
}

ColdStartResult ColdStartEmbed(const EmbeddingTree& tree, const FeatureAssignment& features) {
  ColdStartResult result;
  const TreeNode* node = &tree.root();
  while (!node->is_leaf()) {
    const std::size_t k = node->split->feature_index;
    const FeatureDescriptor& feature = tree.features.at(k);
    const auto it = features.find(feature.source);
    if (it == features.end()) {
      throw Error(ErrorCode::kMissingFeature, "missing feature " + feature.source);
    }
    const bool bit = FeatureBit(tree, feature, it->second);
    result.path.push_back({node->id, k, bit});
    node = &tree.nodes[bit ? node->right : node->left];
  }
  result.leaf_id = node->id;
  result.embedding = node->mean;
  return result;
}

FeatureAssignment AssignmentOf(const RawFeatureTable& table, std::size_t row) {
  FeatureAssignment out;
  for (const auto& column : table.columns) {
    if (column.kind == FeatureKind::kNumeric) {
      out.emplace(column.name, column.numbers.at(row));
    } else {
      out.emplace(column.name, column.raw.at(row));
    }
  }
  return out;
}

}  // namespace embtree
