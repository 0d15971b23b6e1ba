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

#include "embtree/projection.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "embtree/error.hpp"

namespace embtree {
namespace {

void ApplySignConvention(Eigen::Ref<Eigen::RowVectorXd> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (std::abs(v[j]) > best) {
      best = std::abs(v[j]);
      arg = j;
    }
  }
  if (v[arg] < 0) v = -v;
}

// Removes the span of the first `count` rows of `basis` from v.
void Orthogonalize(Eigen::VectorXd& v, const RowMatrix& basis, Eigen::Index count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index c = 0; c < count; ++c) {
      v -= basis.row(c).dot(v) * basis.row(c).transpose();
    }
  }
}

// Deterministic start vector with no special alignment to the axes.
Eigen::VectorXd StartVector(Eigen::Index p, Eigen::Index which) {
  Eigen::VectorXd v(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    v[j] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(j + 1) +
                                0.9 * static_cast<double>(which));
  }
  return v.normalized();
}

void DenseComponents(const RowMatrix& centered, int k, double n,
                     RowMatrix& components, Eigen::VectorXd& variance) {
  const Eigen::Index p = centered.cols();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / n);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kValidation, "covariance eigendecomposition failed");
  }
  // Eigen sorts ascending.
  for (int c = 0; c < k; ++c) {
    const Eigen::Index col = p - 1 - c;
    components.row(c) = solver.eigenvectors().col(col).transpose();
    variance[c] = std::max(0.0, solver.eigenvalues()[col]);
  }
}

void PowerComponents(const RowMatrix& centered, int k, double n,
                     const ProjectionOptions& options, RowMatrix& components,
                     Eigen::VectorXd& variance) {
  const Eigen::Index p = centered.cols();
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v = StartVector(p, c);
    Orthogonalize(v, components, c);
    if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(p, c);
    v.normalize();
    double lambda = 0.0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      Eigen::VectorXd w = centered.transpose() * (centered * v) / n;
      Orthogonalize(w, components, c);
      const double norm = w.norm();
      if (norm <= 1e-300) {
        // v lies in the null space of the remaining covariance.
        lambda = 0.0;
        break;
      }
      w /= norm;
      lambda = norm;
      const double cosine = std::abs(w.dot(v));
      v = std::move(w);
      if (1.0 - cosine < options.tolerance) break;
    }
    components.row(c) = v.transpose();
    variance[c] = lambda;
  }
}

}  // namespace

PrincipalProjection Project(const RowMatrix& subset, int k,
                            const ProjectionOptions& options) {
  const Eigen::Index n = subset.rows();
  const Eigen::Index p = subset.cols();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "projection of an empty subset");
  if (k < 1 || k > 2 || p < k) {
    throw Error(ErrorCode::kInvalidArgument,
                "projection needs 1 <= k <= 2 and k <= dimensionality");
  }

  PrincipalProjection out;
  const bool degenerate = (subset.rowwise() - subset.row(0)).cwiseAbs().maxCoeff() == 0.0;
  // The exact row keeps identical points at exactly zero after centering.
  out.mean = degenerate ? Eigen::VectorXd(subset.row(0).transpose())
                        : Eigen::VectorXd(subset.colwise().mean().transpose());
  RowMatrix centered = subset.rowwise() - out.mean.transpose();
  out.components = RowMatrix::Zero(k, p);
  out.explained_variance = Eigen::VectorXd::Zero(k);

  if (degenerate) {
    for (int c = 0; c < k; ++c) out.components(c, c) = 1.0;
  } else {
    const bool dense =
        options.method == EigenMethod::kDense ||
        (options.method == EigenMethod::kAuto &&
         static_cast<std::size_t>(p) <= options.dense_max_dim);
    if (dense) {
      DenseComponents(centered, k, static_cast<double>(n), out.components,
                      out.explained_variance);
    } else {
      PowerComponents(centered, k, static_cast<double>(n), options, out.components,
                      out.explained_variance);
    }
    for (int c = 0; c < k; ++c) ApplySignConvention(out.components.row(c));
  }
  out.scores = centered * out.components.transpose();
  return out;
}

PrincipalProjection ProjectRows(const RowMatrix& data,
                                std::span<const std::size_t> rows, int k,
                                const ProjectionOptions& options) {
  RowMatrix subset(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    subset.row(static_cast<Eigen::Index>(i)) =
        data.row(static_cast<Eigen::Index>(rows[i]));
  }
  return Project(subset, k, options);
}

}  // namespace embtree
