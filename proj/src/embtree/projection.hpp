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
#include <span>

#include <Eigen/Core>

#include "embtree/dataset.hpp"

namespace embtree {

enum class EigenMethod { kAuto, kDense, kPowerIteration };

struct ProjectionOptions {
  EigenMethod method = EigenMethod::kAuto;
  // kAuto uses the dense covariance solver up to this dimensionality.
  std::size_t dense_max_dim = 256;
  double tolerance = 1e-9;
  int max_iterations = 1000;
};

// Top-k principal axes of a row subset. Population covariance (divide by n);
// each component's largest-magnitude entry is non-negative.
struct PrincipalProjection {
  Eigen::VectorXd mean;
  RowMatrix components;  // k x p, orthonormal rows
  RowMatrix scores;      // n x k
  Eigen::VectorXd explained_variance;
};

PrincipalProjection Project(const RowMatrix& subset, int k,
                            const ProjectionOptions& options = {});

// Same as Project on the gathered rows `rows` of `data`.
PrincipalProjection ProjectRows(const RowMatrix& data,
                                std::span<const std::size_t> rows, int k,
                                const ProjectionOptions& options = {});

}  // namespace embtree
