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
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace embtree {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row i of `vectors` is the embedding of `ids[i]`.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  RowMatrix vectors;

  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

enum class FeatureKind { kNumeric, kCategorical };

const char* FeatureKindName(FeatureKind kind);
std::optional<FeatureKind> ParseFeatureKind(std::string_view name);

struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  // Cell text exactly as read; used for categorical matching and filtering.
  std::vector<std::string> raw;
  // Parsed values, populated for numeric columns only.
  std::vector<double> numbers;
};

struct RawFeatureTable {
  std::vector<std::string> ids;
  std::vector<FeatureColumn> columns;

  const FeatureColumn* Find(std::string_view name) const;
};

struct Dataset {
  EmbeddingMatrix embeddings;
  RawFeatureTable features;
};

// Feature name -> kind. Features absent from a schema are inferred.
using Schema = std::map<std::string, FeatureKind>;

Schema ParseSchemaJson(std::string_view text);
Schema ReadSchemaFile(const std::filesystem::path& path);

EmbeddingMatrix ReadEmbeddingsCsv(std::istream& in);
// Rows keep the file order; `schema` overrides kind inference per column.
RawFeatureTable ReadFeaturesCsv(std::istream& in, const Schema& schema);

// Joins the two tables on id, in embedding row order. Ids present on only
// one side, duplicates, missing cells and non-finite embedding values are
// rejected.
Dataset JoinDataset(EmbeddingMatrix embeddings, RawFeatureTable features);

Dataset LoadDataset(std::istream& embeddings, std::istream& features,
                    const Schema& schema = {});
Dataset LoadDatasetFiles(const std::filesystem::path& embeddings,
                         const std::filesystem::path& features,
                         const std::optional<std::filesystem::path>& schema);

// Hex SHA-256 over ids, embedding values and raw feature cells.
std::string Fingerprint(const Dataset& dataset);

Schema SchemaOf(const RawFeatureTable& table);

// ---------------------------------------------------------------------------
// Binarization.

struct NumericBinning {
  std::vector<double> boundaries;  // bin_count - 1 cut points
  bool constant = false;           // every training value identical

  bool operator==(const NumericBinning&) const = default;
};

struct BinningSpec {
  int bin_count = 3;
  std::map<std::string, NumericBinning> numeric;

  bool operator==(const BinningSpec&) const = default;
};

struct BinAssignment {
  std::vector<int> bins;
  NumericBinning binning;
};

// Type-7 (linear interpolation) quantile of sorted data at probability q.
double Quantile(std::span<const double> sorted, double q);

// Bin j holds boundaries[j-1] <= value < boundaries[j]. Constant training
// columns send every value to bin 0.
int AssignBin(double value, const NumericBinning& binning);

BinAssignment BinNumeric(std::span<const double> column, int bin_count);

enum class PredicateKind { kCategoricalEquals, kNumericBin };

const char* PredicateKindName(PredicateKind kind);
std::optional<PredicateKind> ParsePredicateKind(std::string_view name);

struct FeatureDescriptor {
  std::string source;
  PredicateKind kind = PredicateKind::kCategoricalEquals;
  std::string predicate;
  std::string value;  // categorical-equals only
  int bin = -1;       // numeric-bin only
  double low = -std::numeric_limits<double>::infinity();
  double high = std::numeric_limits<double>::infinity();

  bool operator==(const FeatureDescriptor&) const = default;
};

// Column-major bits: columns[k][i] is feature k of entity i.
struct BinaryFeatureMatrix {
  std::size_t rows = 0;
  std::vector<FeatureDescriptor> descriptors;
  std::vector<std::vector<std::uint8_t>> columns;

  std::size_t cols() const { return columns.size(); }
  std::uint8_t bit(std::size_t row, std::size_t feature) const {
    return columns[feature][row];
  }
};

struct Binarization {
  BinaryFeatureMatrix matrix;
  BinningSpec spec;
};

// Numeric column holding both 0 and 1 and nothing else; maps onto a single
// indicator column.
bool IsBinaryColumn(const FeatureColumn& column);

Binarization Binarize(const RawFeatureTable& table, int bin_count = 3);

std::optional<double> ParseDouble(std::string_view text);

}  // namespace embtree
