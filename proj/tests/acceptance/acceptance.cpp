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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "embtree/analysis.hpp"
#include "embtree/projection.hpp"
#include "embtree/split.hpp"
#include "embtree/tree.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace embtree {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Random (scores, bits) instances with N in [2, 200]. Scales span several
// orders of magnitude; some instances have singleton or tied groups.
Outcome SplitScoreOracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> size(2, 200);
  int matched = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    const double scale = std::pow(10.0, normal(rng));
    const double shift = normal(rng) * 10.0;
    std::vector<double> scores(n);
    std::vector<std::uint8_t> bits(n);
    const double p_one = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = std::bernoulli_distribution(p_one)(rng);
      scores[i] = shift + scale * (normal(rng) + 3.0 * bits[i]);
      if (trial % 10 == 0) scores[i] = std::round(scores[i] / scale) * scale;  // ties
    }
    const SplitEvaluation e = EmbeddingBic(scores, bits);
    const double oracle = testing::DirectLogLikelihood(scores, bits);
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const bool oracle_valid = std::isfinite(oracle) && *lo != *hi;
    if (e.valid != oracle_valid) continue;
    if (!e.valid) {
      ++matched;
      continue;
    }
    const double diff = std::abs(e.log_likelihood - oracle);
    worst = std::max(worst, diff);
    matched += diff <= 1e-9;
  }
  const double secs = Seconds(start);
  return {matched == 1000 && secs < 5.0,
          Format("%d/1000 within 1e-9 (max abs diff %.2e), %.2f s", matched, worst, secs)};
}

Outcome HierarchyRecovery() {
  const auto start = Clock::now();
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = testing::Hierarchy(seed);
    const EmbeddingTree tree = BuildTree(d);
    auto source_of = [&](const TreeNode& node) {
      return node.is_leaf() ? std::string() : tree.features[node.split->feature_index].source;
    };
    const TreeNode& root = tree.root();
    // f0 carries separation 20, f1 separation 5.
    const bool ok = source_of(root) == "f0" && source_of(tree.nodes[root.left]) == "f1" &&
                    source_of(tree.nodes[root.right]) == "f1";
    recovered += ok;
  }
  const double secs = Seconds(start);
  return {recovered >= 95 && secs < 60.0,
          Format("%d/100 seeds recovered, %.2f s", recovered, secs)};
}

Dataset MixedDataset(std::uint64_t seed, std::size_t n, std::size_t p) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::string> city(n);
  std::vector<double> freq(n);
  std::vector<int> flag(n);
  const char* cities[] = {"LA", "NYC", "SF", "SEA"};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng() % 4);
    city[i] = cities[c];
    freq[i] = std::exp(normal(rng));
    flag[i] = static_cast<int>(rng() % 2);
    for (std::size_t j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          normal(rng) + (j == 0 ? 4.0 * c : 0.0) + (j == 1 % p ? 2.0 * flag[i] : 0.0) +
          (j == 2 % p ? freq[i] : 0.0);
    }
  }
  return testing::MakeDataset(
      std::move(x), {testing::CategoricalColumn("city", city), testing::NumericColumn("freq", freq),
                     testing::BitColumn("flag", flag)});
}

Outcome Determinism() {
  int identical = 0, total = 0;
  auto compare = [&](const Dataset& d, BuildOptions opts) {
    opts.parallel = false;
    const std::string a = SerializeTree(BuildTree(d, opts));
    const std::string b = SerializeTree(BuildTree(d, opts));
    opts.parallel = true;
    opts.split.threads = 4;  // fork even on a single core
    const std::string c = SerializeTree(BuildTree(d, opts));
    total += 2;
    identical += (a == b) + (a == c);
  };
  BuildOptions opts;
  compare(testing::Hierarchy(7), opts);
  opts.criteria.min_node_size = 5;
  compare(MixedDataset(3, 5000, 12), opts);
  opts.bin_count = 5;
  compare(MixedDataset(4, 3000, 300), opts);
  return {identical == total,
          Format("%d/%d sequential/parallel builds byte-identical", identical, total)};
}

bool Partitions(const EmbeddingTree& tree, const Binarization& b) {
  const std::size_t n = tree.entity_count();
  std::vector<int> seen(n, 0);
  std::size_t leaf_sum = 0;
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) {
      leaf_sum += node.count;
      if (node.entities.size() != node.count) return false;
      for (std::size_t e : node.entities) {
        if (e >= n) return false;
        ++seen[e];
      }
      continue;
    }
    const auto parent = tree.Members(node.id);
    const auto left = tree.Members(node.left);
    const auto right = tree.Members(node.right);
    std::vector<std::size_t> both;
    std::set_intersection(left.begin(), left.end(), right.begin(), right.end(),
                          std::back_inserter(both));
    if (!both.empty()) return false;
    std::vector<std::size_t> merged;
    std::merge(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(merged));
    if (merged != parent || parent.size() != node.count) return false;
    const auto& column = b.matrix.columns[node.split->feature_index];
    for (std::size_t e : left)
      if (column[e] != 0) return false;
    for (std::size_t e : right)
      if (column[e] != 1) return false;
  }
  return leaf_sum == n && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

Outcome Partition() {
  std::mt19937_64 rng(50);
  int ok = 0;
  std::size_t nodes = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng() % 2000;
    const std::size_t p = 1 + rng() % 20;
    const Dataset d = MixedDataset(rng(), n, p);
    BuildOptions opts;
    opts.criteria.min_node_size = 2 + rng() % 40;
    opts.criteria.max_depth = rng() % 12;
    opts.bin_count = 2 + static_cast<int>(rng() % 6);
    opts.split.min_side = 1 + rng() % 3;
    const Binarization b = Binarize(d.features, opts.bin_count);
    const EmbeddingTree tree = BuildTree(d.embeddings, b, opts);
    nodes += tree.nodes.size();
    ok += Partitions(tree, b);
  }
  return {ok == 50, Format("%d/50 random datasets partition exactly (%zu nodes checked)", ok, nodes)};
}

Outcome PcaOracle() {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> normal;
  int ok = 0;
  double worst_value = 0.0, worst_cos = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + static_cast<int>(rng() % 31);
    const int n = p + 1 + static_cast<int>(rng() % 200);
    RowMatrix x(n, p);
    // Gaussian rows through a random mixing matrix: a generic covariance.
    RowMatrix mix(p, p);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) mix(a, b) = normal(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
    x = (x * mix).eval();
    std::vector<std::vector<double>> rows(n, std::vector<double>(p));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) rows[i][j] = x(i, j);
    const auto oracle = testing::JacobiEigen(testing::Covariance(rows));
    bool good = true;
    for (int k = 1; k <= 2; ++k) {
      const PrincipalProjection proj = Project(x, k);
      for (int c = 0; c < k; ++c) {
        const double rel = std::abs(proj.explained_variance(c) - oracle.values[c]) /
                           std::max(std::abs(oracle.values[c]), 1e-300);
        double cosine = 0.0;
        for (int j = 0; j < p; ++j) cosine += proj.components(c, j) * oracle.vectors[c][j];
        cosine = std::abs(cosine);
        worst_value = std::max(worst_value, rel);
        worst_cos = std::min(worst_cos, cosine);
        good = good && rel <= 1e-6 && cosine >= 1.0 - 1e-8;
      }
    }
    ok += good;
  }
  return {ok == 100, Format("%d/100 matrices match (max rel eigenvalue err %.1e, min |cos| 1-%.1e)",
                            ok, worst_value, 1.0 - worst_cos)};
}

// One leaf holding all entities; the leaf's projected scores follow the
// distribution placed on axis 0.
bool LeafInconsistent(std::uint64_t seed, bool bimodal) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t n = 200, p = 8;
  RowMatrix x(n, p);
  std::vector<int> bits(n);
  for (std::size_t i = 0; i < n; ++i) {
    bits[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < p; ++j) x(i, j) = normal(rng) * (j == 0 ? 1.0 : 0.3);
    if (bimodal) x(i, 0) += i < n / 2 ? -3.0 : 3.0;
  }
  const Dataset d = testing::MakeDataset(std::move(x), {testing::BitColumn("u", bits)});
  BuildOptions opts;
  opts.criteria.max_depth = 0;
  const EmbeddingTree tree = BuildTree(d, opts);
  return !DiagnoseLeaf(tree, d.embeddings, 0).consistent;
}

Outcome DiagnosisPower() {
  int consistent = 0, inconsistent = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    consistent += !LeafInconsistent(7000 + seed, false);
    inconsistent += LeafInconsistent(8000 + seed, true);
  }
  return {consistent >= 95 && inconsistent >= 95,
          Format("unimodal judged consistent %d/100, 6-sigma bimodal judged inconsistent %d/100",
                 consistent, inconsistent)};
}

Outcome ColdStartFidelity() {
  const Dataset d = testing::FourBlob();
  const EmbeddingTree tree = BuildTree(d);
  int ok = 0;
  double worst = 0.0;
  const std::size_t n = d.embeddings.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const ColdStartResult r = ColdStartEmbed(tree, AssignmentOf(d.features, i));
    const auto& leaf = tree.node(r.leaf_id);
    if (!std::binary_search(leaf.entities.begin(), leaf.entities.end(), i)) continue;
    bool close = true;
    for (std::size_t j = 0; j < d.embeddings.dim(); ++j) {
      double sum = 0.0;
      for (std::size_t e : leaf.entities) sum += d.embeddings.vectors(e, j);
      const double diff = std::abs(r.embedding[j] - sum / static_cast<double>(leaf.entities.size()));
      worst = std::max(worst, diff);
      close = close && diff <= 1e-12;
    }
    ok += close;
  }
  return {ok == static_cast<int>(n),
          Format("%d/%zu entities reach their leaf and its mean (max diff %.1e), %zu leaves", ok, n,
                 worst, tree.leaf_count())};
}

Outcome Scale() {
  const std::size_t n = 50000, p = 128, f = 10;
  std::mt19937_64 rng(128);
  std::normal_distribution<double> normal;
  RowMatrix x(n, p);
  std::vector<std::vector<double>> values(f, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < f; ++k) values[k][i] = normal(rng);
    for (std::size_t j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          normal(rng) + (j < f ? (10.0 - j) * values[j][i] : 0.0);
    }
  }
  std::vector<FeatureColumn> columns;
  for (std::size_t k = 0; k < f; ++k) {
    columns.push_back(testing::NumericColumn("x" + std::to_string(k), values[k]));
  }
  Dataset d = testing::MakeDataset(std::move(x), std::move(columns));
  values.clear();
  values.shrink_to_fit();

  const auto start = Clock::now();
  const EmbeddingTree tree = BuildTree(d);
  const double secs = Seconds(start);
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_gb = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
  const bool shape = tree.entity_count() == n && tree.features.size() == 30;
  return {shape && secs < 120.0 && peak_gb < 4.0,
          Format("N=%zu p=%zu q=%zu built in %.1f s, peak RSS %.2f GB, %zu leaves", n, p,
                 tree.features.size(), secs, peak_gb, tree.leaf_count())};
}

}  // namespace
}  // namespace embtree

int main() {
  using embtree::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"split score oracle", embtree::SplitScoreOracle},
      {"hierarchy recovery", embtree::HierarchyRecovery},
      {"determinism", embtree::Determinism},
      {"partition and conservation", embtree::Partition},
      {"pca oracle", embtree::PcaOracle},
      {"diagnosis power", embtree::DiagnosisPower},
      {"cold-start fidelity", embtree::ColdStartFidelity},
      {"scale", embtree::Scale},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s  %s: %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
