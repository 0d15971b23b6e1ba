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

#include "embtree/split.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>
#include <vector>

namespace embtree {
namespace {

constexpr double kMinFloor = 1e-300;

struct ScoreRange {
  double lo, hi;
};

ScoreRange RangeOf(std::span<const double> scores) {
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  return {*lo, *hi};
}

double FloorFromRange(ScoreRange range, double floor_scale) {
  const double width = range.hi - range.lo;
  return std::max(floor_scale * width * width, kMinFloor);
}

// BitAt(i) yields the bit of scored entity i.
template <typename BitAt>
SplitEvaluation Evaluate(std::span<const double> scores, BitAt bit_at,
                         double floor, bool degenerate, std::size_t min_side,
                         std::size_t feature_index) {
  const std::size_t n = scores.size();
  SplitEvaluation e;
  e.feature_index = feature_index;

  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const int g = bit_at(i) ? 1 : 0;
    sum[g] += scores[i];
    ++count[g];
  }
  e.s = count[0];
  e.n_minus_s = count[1];
  const double total = static_cast<double>(n);
  e.w1 = static_cast<double>(count[0]) / total;
  e.w2 = static_cast<double>(count[1]) / total;
  e.mu1 = count[0] ? sum[0] / static_cast<double>(count[0]) : 0.0;
  e.mu2 = count[1] ? sum[1] / static_cast<double>(count[1]) : 0.0;

  double ss[2] = {0.0, 0.0};
  const double mu[2] = {e.mu1, e.mu2};
  for (std::size_t i = 0; i < n; ++i) {
    const int g = bit_at(i) ? 1 : 0;
    const double d = scores[i] - mu[g];
    ss[g] += d * d;
  }
  e.var1 = count[0] ? ss[0] / static_cast<double>(count[0]) : 0.0;
  e.var2 = count[1] ? ss[1] / static_cast<double>(count[1]) : 0.0;

  e.valid = !degenerate && count[0] >= std::max<std::size_t>(min_side, 1) &&
            count[1] >= std::max<std::size_t>(min_side, 1);
  if (!e.valid) {
    e.log_likelihood = -std::numeric_limits<double>::infinity();
    return e;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const double n1 = static_cast<double>(count[0]);
  const double n2 = static_cast<double>(count[1]);
  e.log_likelihood = -0.5 * n1 * std::log(two_pi * std::max(e.var1, floor)) -
                     0.5 * n2 * std::log(two_pi * std::max(e.var2, floor)) +
                     n1 * std::log(e.w1) + n2 * std::log(e.w2);
  return e;
}

bool Better(const SplitEvaluation& a, const SplitEvaluation& b) {
  if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
  return a.feature_index < b.feature_index;
}

}  // namespace

double VarianceFloor(std::span<const double> scores, double floor_scale) {
  if (scores.empty()) return kMinFloor;
  return FloorFromRange(RangeOf(scores), floor_scale);
}

SplitEvaluation EmbeddingBic(std::span<const double> scores,
                             std::span<const std::uint8_t> bits,
                             const SplitOptions& options,
                             std::size_t feature_index) {
  if (scores.empty()) {
    SplitEvaluation e;
    e.feature_index = feature_index;
    e.log_likelihood = -std::numeric_limits<double>::infinity();
    return e;
  }
  const ScoreRange range = RangeOf(scores);
  return Evaluate(
      scores, [&](std::size_t i) { return bits[i] != 0; },
      FloorFromRange(range, options.floor_scale), range.lo == range.hi,
      options.min_side, feature_index);
}

std::optional<SplitEvaluation> BestSplit(std::span<const double> scores,
                                         const BinaryFeatureMatrix& matrix,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> active_features,
                                         const SplitOptions& options) {
  if (scores.empty() || active_features.empty()) return std::nullopt;
  const ScoreRange range = RangeOf(scores);
  const double floor = FloorFromRange(range, options.floor_scale);
  const bool degenerate = range.lo == range.hi;

  std::vector<SplitEvaluation> results(active_features.size());
  auto evaluate_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const std::size_t k = active_features[a];
      const auto& column = matrix.columns[k];
      results[a] = Evaluate(
          scores, [&](std::size_t i) { return column[rows[i]] != 0; }, floor,
          degenerate, options.min_side, k);
    }
  };

  const std::size_t hw = options.threads != 0
                             ? options.threads
                             : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, active_features.size());
  if (options.parallel && workers > 1) {
    std::vector<std::future<void>> tasks;
    const std::size_t chunk = (active_features.size() + workers - 1) / workers;
    for (std::size_t begin = 0; begin < active_features.size(); begin += chunk) {
      const std::size_t end = std::min(begin + chunk, active_features.size());
      tasks.push_back(std::async(std::launch::async, evaluate_range, begin, end));
    }
    for (auto& t : tasks) t.get();
  } else {
    evaluate_range(0, active_features.size());
  }

  // Sequential reduction in feature order keeps the tie-break identical to
  // the single-threaded loop.
  std::optional<SplitEvaluation> best;
  for (const auto& e : results) {
    if (!e.valid) continue;
    if (!best || Better(e, *best)) best = e;
  }
  return best;
}

std::optional<SplitEvaluation> BestSplit(std::span<const double> scores,
                                         const BinaryFeatureMatrix& matrix,
                                         std::span<const std::size_t> active_features,
                                         const SplitOptions& options) {
  std::vector<std::size_t> rows(scores.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return BestSplit(scores, matrix, rows, active_features, options);
}

}  // namespace embtree
