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

#include "embtree/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "embtree/error.hpp"
#include "json.hpp"

namespace embtree {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes;
// embedded newlines are not supported.
std::vector<std::string> SplitCsvLine(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : std::string(Trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::kParse,
                "unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(was_quoted ? field : std::string(Trim(field)));
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable ReadCsv(std::istream& in, std::string_view what) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    const std::size_t row = table.rows.size() + 1;
    if (fields.size() > table.header.size()) {
      throw Error(ErrorCode::kParse, std::string(what) + ": row " +
                                         std::to_string(row) + " has " +
                                         std::to_string(fields.size()) +
                                         " cells, header has " +
                                         std::to_string(table.header.size()));
    }
    if (fields.size() < table.header.size()) {
      throw Error(ErrorCode::kValidation,
                  std::string(what) + ": missing cell at row " +
                      std::to_string(row) + ", column " +
                      table.header[fields.size()]);
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        throw Error(ErrorCode::kValidation,
                    std::string(what) + ": missing cell at row " +
                        std::to_string(row) + ", column " + table.header[c]);
      }
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) {
    throw Error(ErrorCode::kParse, std::string(what) + ": empty file");
  }
  if (table.header.empty() || table.header.front() != "id") {
    throw Error(ErrorCode::kParse,
                std::string(what) + ": first header column must be 'id'");
  }
  return table;
}

std::ifstream OpenOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return in;
}

}  // namespace

const char* FeatureKindName(FeatureKind kind) {
  return kind == FeatureKind::kNumeric ? "numeric" : "categorical";
}

std::optional<FeatureKind> ParseFeatureKind(std::string_view name) {
  if (name == "numeric") return FeatureKind::kNumeric;
  if (name == "categorical") return FeatureKind::kCategorical;
  return std::nullopt;
}

const char* PredicateKindName(PredicateKind kind) {
  return kind == PredicateKind::kNumericBin ? "numeric-bin" : "categorical-equals";
}

std::optional<PredicateKind> ParsePredicateKind(std::string_view name) {
  if (name == "numeric-bin") return PredicateKind::kNumericBin;
  if (name == "categorical-equals") return PredicateKind::kCategoricalEquals;
  return std::nullopt;
}

std::optional<double> ParseDouble(std::string_view text) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

const FeatureColumn* RawFeatureTable::Find(std::string_view name) const {
  for (const auto& column : columns) {
    if (column.name == name) return &column;
  }
  return nullptr;
}

Schema ParseSchemaJson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("schema: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParse, "schema: expected a JSON object");
  }
  Schema schema;
  for (const auto& [name, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::kParse, "schema: kind of '" + name + "' must be a string");
    }
    auto kind = ParseFeatureKind(value.get<std::string>());
    if (!kind) {
      throw Error(ErrorCode::kParse, "schema: unknown kind '" +
                                         value.get<std::string>() + "' for " + name);
    }
    schema.emplace(name, *kind);
  }
  return schema;
}

Schema ReadSchemaFile(const std::filesystem::path& path) {
  auto in = OpenOrThrow(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ParseSchemaJson(text);
}

EmbeddingMatrix ReadEmbeddingsCsv(std::istream& in) {
  CsvTable csv = ReadCsv(in, "embeddings");
  const std::size_t p = csv.header.size() - 1;
  if (p == 0) {
    throw Error(ErrorCode::kParse, "embeddings: no embedding dimensions in header");
  }
  if (csv.rows.empty()) {
    throw Error(ErrorCode::kValidation, "embeddings: no rows");
  }
  EmbeddingMatrix out;
  out.vectors.resize(static_cast<Eigen::Index>(csv.rows.size()),
                     static_cast<Eigen::Index>(p));
  out.ids.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    auto& row = csv.rows[r];
    out.ids.push_back(std::move(row[0]));
    for (std::size_t d = 0; d < p; ++d) {
      auto value = ParseDouble(row[d + 1]);
      if (!value) {
        throw Error(ErrorCode::kParse, "invalid number '" + row[d + 1] +
                                           "' at row " + std::to_string(r + 1) +
                                           ", dim " + std::to_string(d));
      }
      if (!std::isfinite(*value)) {
        throw Error(ErrorCode::kValidation, "non-finite value at row " +
                                                std::to_string(r + 1) + ", dim " +
                                                std::to_string(d));
      }
      out.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = *value;
    }
  }
  return out;
}

RawFeatureTable ReadFeaturesCsv(std::istream& in, const Schema& schema) {
  CsvTable csv = ReadCsv(in, "features");
  RawFeatureTable table;
  const std::size_t width = csv.header.size() - 1;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < width; ++c) {
    if (!seen.insert(csv.header[c + 1]).second) {
      throw Error(ErrorCode::kValidation,
                  "features: duplicate column " + csv.header[c + 1]);
    }
  }
  for (const auto& [name, kind] : schema) {
    if (!seen.count(name)) {
      throw Error(ErrorCode::kValidation,
                  "schema names unknown feature " + name);
    }
  }
  table.ids.reserve(csv.rows.size());
  for (auto& row : csv.rows) table.ids.push_back(row[0]);
  table.columns.resize(width);
  for (std::size_t c = 0; c < width; ++c) {
    FeatureColumn& column = table.columns[c];
    column.name = csv.header[c + 1];
    column.raw.reserve(csv.rows.size());
    for (auto& row : csv.rows) column.raw.push_back(std::move(row[c + 1]));

    std::vector<double> numbers;
    numbers.reserve(column.raw.size());
    bool all_numeric = true;
    for (const auto& cell : column.raw) {
      auto value = ParseDouble(cell);
      if (!value || !std::isfinite(*value)) {
        all_numeric = false;
        break;
      }
      numbers.push_back(*value);
    }
    const auto it = schema.find(column.name);
    if (it != schema.end()) {
      column.kind = it->second;
      if (column.kind == FeatureKind::kNumeric && !all_numeric) {
        throw Error(ErrorCode::kParse, "features: column " + column.name +
                                           " is declared numeric but has a "
                                           "non-numeric cell");
      }
    } else {
      column.kind = all_numeric ? FeatureKind::kNumeric : FeatureKind::kCategorical;
    }
    if (column.kind == FeatureKind::kNumeric) column.numbers = std::move(numbers);
  }
  return table;
}

Dataset JoinDataset(EmbeddingMatrix embeddings, RawFeatureTable features) {
  const std::size_t n = embeddings.rows();
  if (n == 0) throw Error(ErrorCode::kValidation, "empty dataset");

  std::unordered_map<std::string, std::size_t> emb_index;
  emb_index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!emb_index.emplace(embeddings.ids[i], i).second) {
      throw Error(ErrorCode::kValidation, "duplicate id " + embeddings.ids[i]);
    }
  }
  std::unordered_map<std::string, std::size_t> feat_index;
  feat_index.reserve(features.ids.size());
  for (std::size_t i = 0; i < features.ids.size(); ++i) {
    if (!feat_index.emplace(features.ids[i], i).second) {
      throw Error(ErrorCode::kValidation, "duplicate id " + features.ids[i]);
    }
    if (!emb_index.count(features.ids[i])) {
      throw Error(ErrorCode::kValidation, "unmatched entity " + features.ids[i]);
    }
  }
  for (const auto& id : embeddings.ids) {
    if (!feat_index.count(id)) {
      throw Error(ErrorCode::kValidation, "unmatched entity " + id);
    }
  }

  // Reorder feature rows into embedding order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = feat_index.at(embeddings.ids[i]);
  RawFeatureTable aligned;
  aligned.ids = embeddings.ids;
  aligned.columns.reserve(features.columns.size());
  for (auto& column : features.columns) {
    FeatureColumn out;
    out.name = std::move(column.name);
    out.kind = column.kind;
    out.raw.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.raw.push_back(std::move(column.raw[order[i]]));
    if (column.kind == FeatureKind::kNumeric) {
      out.numbers.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.numbers.push_back(column.numbers[order[i]]);
    }
    aligned.columns.push_back(std::move(out));
  }
  return Dataset{std::move(embeddings), std::move(aligned)};
}

Dataset LoadDataset(std::istream& embeddings, std::istream& features,
                    const Schema& schema) {
  auto emb = ReadEmbeddingsCsv(embeddings);
  auto feat = ReadFeaturesCsv(features, schema);
  return JoinDataset(std::move(emb), std::move(feat));
}

Dataset LoadDatasetFiles(const std::filesystem::path& embeddings,
                         const std::filesystem::path& features,
                         const std::optional<std::filesystem::path>& schema) {
  auto emb_in = OpenOrThrow(embeddings);
  auto feat_in = OpenOrThrow(features);
  const Schema parsed = schema ? ReadSchemaFile(*schema) : Schema{};
  return LoadDataset(emb_in, feat_in, parsed);
}

Schema SchemaOf(const RawFeatureTable& table) {
  Schema schema;
  for (const auto& column : table.columns) schema.emplace(column.name, column.kind);
  return schema;
}

std::string Fingerprint(const Dataset& dataset) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 unavailable");
  }
  auto feed = [&](const void* data, std::size_t size) {
    EVP_DigestUpdate(ctx.get(), data, size);
  };
  auto feed_u64 = [&](std::uint64_t v) {
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(v >> (8 * b));
    feed(bytes, 8);
  };
  auto feed_str = [&](const std::string& s) {
    feed_u64(s.size());
    feed(s.data(), s.size());
  };

  const auto& emb = dataset.embeddings;
  feed_str("embtree-dataset-v1");
  feed_u64(emb.rows());
  feed_u64(emb.dim());
  for (const auto& id : emb.ids) feed_str(id);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    for (std::size_t d = 0; d < emb.dim(); ++d) {
      feed_u64(std::bit_cast<std::uint64_t>(
          emb.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d))));
    }
  }
  feed_u64(dataset.features.columns.size());
  for (const auto& column : dataset.features.columns) {
    feed_str(column.name);
    for (const auto& cell : column.raw) feed_str(cell);
  }

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

// ---------------------------------------------------------------------------

double Quantile(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int AssignBin(double value, const NumericBinning& binning) {
  if (binning.constant) return 0;
  const auto& b = binning.boundaries;
  return static_cast<int>(std::upper_bound(b.begin(), b.end(), value) - b.begin());
}

BinAssignment BinNumeric(std::span<const double> column, int bin_count) {
  if (bin_count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "bin_count must be >= 2");
  }
  if (column.size() < static_cast<std::size_t>(bin_count)) {
    throw Error(ErrorCode::kValidation,
                "cannot bin " + std::to_string(column.size()) + " values into " +
                    std::to_string(bin_count) + " bins");
  }
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());

  BinAssignment out;
  out.binning.constant = sorted.front() == sorted.back();
  for (int k = 1; k < bin_count; ++k) {
    out.binning.boundaries.push_back(
        Quantile(sorted, static_cast<double>(k) / bin_count));
  }
  out.bins.reserve(column.size());
  for (double v : column) out.bins.push_back(AssignBin(v, out.binning));
  return out;
}

bool IsBinaryColumn(const FeatureColumn& column) {
  if (column.kind != FeatureKind::kNumeric) return false;
  bool zero = false;
  bool one = false;
  for (double v : column.numbers) {
    if (v == 0.0) {
      zero = true;
    } else if (v == 1.0) {
      one = true;
    } else {
      return false;
    }
  }
  return zero && one;
}

namespace {

std::string FormatEdge(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Binarization Binarize(const RawFeatureTable& table, int bin_count) {
  if (bin_count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "bin_count must be >= 2");
  }
  Binarization out;
  out.spec.bin_count = bin_count;
  auto& m = out.matrix;
  m.rows = table.ids.size();

  for (const auto& column : table.columns) {
    if (IsBinaryColumn(column)) {
      FeatureDescriptor d;
      d.source = column.name;
      d.kind = PredicateKind::kCategoricalEquals;
      d.value = "1";
      d.predicate = column.name + "==1";
      std::vector<std::uint8_t> bits(m.rows);
      for (std::size_t i = 0; i < m.rows; ++i) bits[i] = column.numbers[i] == 1.0;
      m.descriptors.push_back(std::move(d));
      m.columns.push_back(std::move(bits));
      continue;
    }

    if (column.kind == FeatureKind::kCategorical) {
      const std::set<std::string> values(column.raw.begin(), column.raw.end());
      for (const auto& value : values) {
        FeatureDescriptor d;
        d.source = column.name;
        d.kind = PredicateKind::kCategoricalEquals;
        d.value = value;
        d.predicate = column.name + "==" + value;
        std::vector<std::uint8_t> bits(m.rows);
        for (std::size_t i = 0; i < m.rows; ++i) bits[i] = column.raw[i] == value;
        m.descriptors.push_back(std::move(d));
        m.columns.push_back(std::move(bits));
      }
      continue;
    }

    BinAssignment assignment = BinNumeric(column.numbers, bin_count);
    const auto& b = assignment.binning.boundaries;
    for (int j = 0; j < bin_count; ++j) {
      FeatureDescriptor d;
      d.source = column.name;
      d.kind = PredicateKind::kNumericBin;
      d.bin = j;
      if (j > 0) d.low = b[static_cast<std::size_t>(j - 1)];
      if (j < bin_count - 1) d.high = b[static_cast<std::size_t>(j)];
      d.predicate = column.name + "∈bin" + std::to_string(j) + " [" +
                    (j > 0 ? FormatEdge(d.low) : std::string("-inf")) + ", " +
                    (j < bin_count - 1 ? FormatEdge(d.high) : std::string("inf")) + ")";
      std::vector<std::uint8_t> bits(m.rows);
      for (std::size_t i = 0; i < m.rows; ++i) bits[i] = assignment.bins[i] == j;
      m.descriptors.push_back(std::move(d));
      m.columns.push_back(std::move(bits));
    }
    out.spec.numeric.emplace(column.name, std::move(assignment.binning));
  }
  return out;
}

}  // namespace embtree
