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
#include <cstdint>
#include <optional>
#include <span>

#include "embtree/dataset.hpp"

namespace embtree {

// Hard two-component Gaussian mixture fit of projected scores, with the
// component of each entity dictated by one binary feature. The latent
// assignment of the soft mixture collapses to the feature bit, so no
// responsibilities are ever stored: group 1 holds bit 0, group 2 holds bit 1.
//
// Maximum-likelihood estimates per group j:
//   mu_j  = group mean,  var_j = group population variance,  w_j = n_j / n
// and the maximized log likelihood (terms constant in the parameters dropped):
//   L = -(n1/2) log(2 pi var1) - (n2/2) log(2 pi var2) + n1 log w1 + n2 log w2
struct SplitEvaluation {
  std::size_t feature_index = 0;
  std::size_t s = 0;          // entities with bit 0
  std::size_t n_minus_s = 0;  // entities with bit 1
  double mu1 = 0.0, mu2 = 0.0;
  double var1 = 0.0, var2 = 0.0;
  double w1 = 0.0, w2 = 0.0;
  double log_likelihood = 0.0;
  bool valid = false;

  bool operator==(const SplitEvaluation&) const = default;
};

struct SplitOptions {
  std::size_t min_side = 1;
  double floor_scale = 1e-12;
  // Evaluate candidate features on worker threads.
  bool parallel = false;
  // Worker count when parallel; 0 means hardware concurrency.
  std::size_t threads = 0;
};

// max(floor_scale * range(scores)^2, 1e-300).
double VarianceFloor(std::span<const double> scores, double floor_scale = 1e-12);

// Invalid (log_likelihood = -inf) when a side has fewer than min_side
// entities or every score is identical.
SplitEvaluation EmbeddingBic(std::span<const double> scores,
                             std::span<const std::uint8_t> bits,
                             const SplitOptions& options = {},
                             std::size_t feature_index = 0);

// Evaluates each active feature on the entities `rows` of `matrix`, whose
// projected scores are `scores` (scores[i] belongs to rows[i]). Returns the
// valid evaluation with the largest log likelihood; ties go to the lowest
// feature index.
std::optional<SplitEvaluation> BestSplit(std::span<const double> scores,
                                         const BinaryFeatureMatrix& matrix,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> active_features,
                                         const SplitOptions& options = {});

// Convenience form where the matrix rows are exactly the scored entities.
std::optional<SplitEvaluation> BestSplit(std::span<const double> scores,
                                         const BinaryFeatureMatrix& matrix,
                                         std::span<const std::size_t> active_features,
                                         const SplitOptions& options = {});

}  // namespace embtree
