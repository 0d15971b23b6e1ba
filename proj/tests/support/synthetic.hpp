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

// Synthetic datasets shared by the unit and acceptance suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "embtree/dataset.hpp"

namespace embtree::testing {

inline FeatureColumn NumericColumn(std::string name, const std::vector<double>& values) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = FeatureKind::kNumeric;
  c.numbers = values;
  for (double v : values) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    c.raw.emplace_back(buf);
  }
  return c;
}

inline FeatureColumn CategoricalColumn(std::string name, std::vector<std::string> values) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = FeatureKind::kCategorical;
  c.raw = std::move(values);
  return c;
}

inline FeatureColumn BitColumn(std::string name, const std::vector<int>& bits) {
  std::vector<double> values(bits.begin(), bits.end());
  return NumericColumn(std::move(name), values);
}

inline Dataset MakeDataset(RowMatrix vectors, std::vector<FeatureColumn> columns) {
  Dataset d;
  const auto n = static_cast<std::size_t>(vectors.rows());
  for (std::size_t i = 0; i < n; ++i) d.embeddings.ids.push_back("e" + std::to_string(i));
  d.embeddings.vectors = std::move(vectors);
  d.features.ids = d.embeddings.ids;
  d.features.columns = std::move(columns);
  return d;
}

// Four Gaussian blobs: A shifts by 20 along axis 0, B by 2 along axis 1.
inline Dataset FourBlob(std::uint64_t seed = 7, std::size_t per_blob = 50, std::size_t p = 8,
                        double noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise);
  const std::size_t n = 4 * per_blob;
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<int> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t blob = i % 4;
    a[i] = static_cast<int>(blob / 2);
    b[i] = static_cast<int>(blob % 2);
    for (std::size_t d = 0; d < p; ++d) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = normal(rng);
    x(static_cast<Eigen::Index>(i), 0) += 20.0 * a[i];
    x(static_cast<Eigen::Index>(i), 1) += 2.0 * b[i];
  }
  return MakeDataset(std::move(x), {BitColumn("A", a), BitColumn("B", b)});
}

// Three independent binary features with blob separations along orthogonal
// axes; feature names are ordered weakest first so that index order never
// favours the strongest feature.
struct HierarchySpec {
  std::size_t n = 2000;
  std::size_t p = 16;
  double sigma = 1.0;
  std::vector<double> separations = {20.0, 5.0, 1.0};
};

inline Dataset Hierarchy(std::uint64_t seed, const HierarchySpec& spec = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, spec.sigma);
  std::bernoulli_distribution coin(0.5);
  const std::size_t f = spec.separations.size();
  RowMatrix x(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.p));
  std::vector<std::vector<int>> bits(f, std::vector<int>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t d = 0; d < spec.p; ++d) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = normal(rng);
    }
    for (std::size_t k = 0; k < f; ++k) {
      bits[k][i] = coin(rng) ? 1 : 0;
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += spec.separations[k] * bits[k][i];
    }
  }
  std::vector<FeatureColumn> columns;
  for (std::size_t k = f; k-- > 0;) {
    columns.push_back(BitColumn("f" + std::to_string(k), bits[k]));
  }
  return MakeDataset(std::move(x), std::move(columns));
}

inline std::filesystem::path TempDir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("embtree_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void WriteCsv(const Dataset& d, const std::filesystem::path& embeddings,
                     const std::filesystem::path& features) {
  std::ofstream e(embeddings);
  e << "id";
  for (std::size_t j = 0; j < d.embeddings.dim(); ++j) e << ",d" << j;
  e << "\n";
  for (std::size_t i = 0; i < d.embeddings.rows(); ++i) {
    e << d.embeddings.ids[i];
    for (std::size_t j = 0; j < d.embeddings.dim(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g",
                    d.embeddings.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      e << "," << buf;
    }
    e << "\n";
  }
  std::ofstream f(features);
  f << "id";
  for (const auto& c : d.features.columns) f << "," << c.name;
  f << "\n";
  for (std::size_t i = 0; i < d.features.ids.size(); ++i) {
    f << d.features.ids[i];
    for (const auto& c : d.features.columns) f << "," << c.raw[i];
    f << "\n";
  }
}

}  // namespace embtree::testing
