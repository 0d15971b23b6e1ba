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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "embtree/dataset.hpp"
#include "embtree/tree.hpp"

namespace embtree {

struct DiagnosisOptions {
  // Minimum entities on each side of a candidate cut. Singleton sides have
  // zero variance and would always win, so the effective minimum is
  // max(min_group, tree min_side).
  std::size_t min_group = 3;
  double floor_scale = 1e-12;
};

// One Gaussian against the best hard two-way threshold cut of the 1D
// principal scores, penalised by (3/2) ln n for the three extra parameters.
struct ConsistencyReport {
  std::size_t leaf_id = 0;
  bool consistent = true;
  std::size_t count = 0;
  double single_loglik = 0.0;
  std::optional<double> split_loglik;  // empty when no admissible cut
  double delta_loglik = 0.0;           // split - single, 0 without a cut
  double penalty = 0.0;
  double statistic = 0.0;              // delta - penalty
  std::optional<double> cut;           // threshold between the two groups
  std::size_t left_count = 0;          // scores below the cut
  int cluster_count_estimate = 1;
};

// Core test over already projected scores.
ConsistencyReport DiagnoseScores(std::span<const double> scores,
                                 const DiagnosisOptions& options = {});

ConsistencyReport DiagnoseLeaf(const EmbeddingTree& tree,
                               const EmbeddingMatrix& embeddings, std::size_t leaf_id,
                               const DiagnosisOptions& options = {});

// Leaves large enough to diagnose (at least 2 * min_side entities).
std::vector<std::size_t> DiagnosableLeaves(const EmbeddingTree& tree);

using FeatureValue = std::variant<double, std::string>;
using FeatureAssignment = std::map<std::string, FeatureValue>;

struct PathStep {
  std::size_t node_id = 0;
  std::size_t feature_index = 0;
  bool bit = false;  // branch taken: false = left
};

struct ColdStartResult {
  std::size_t leaf_id = 0;
  std::vector<double> embedding;
  std::vector<PathStep> path;
};

// Evaluates one binary feature for a new entity, using the training bins.
bool FeatureBit(const EmbeddingTree& tree, const FeatureDescriptor& feature,
                const FeatureValue& value);

ColdStartResult ColdStartEmbed(const EmbeddingTree& tree, const FeatureAssignment& features);

// Raw features of training entity `row` as a cold-start query.
FeatureAssignment AssignmentOf(const RawFeatureTable& table, std::size_t row);

}  // namespace embtree
