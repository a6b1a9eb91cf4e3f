// Copyright 2026 The pdsnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pdsnet/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdsnet {

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEuler = 0.5772156649;
  const double m = static_cast<double>(n);
  return 2.0 * (std::log(m - 1.0) + kEuler) - 2.0 * (m - 1.0) / m;
}

IsolationForest::IsolationForest(std::span<const double> values,
                                 const IsolationForestParams& params) {
  if (values.empty()) {
    throw std::invalid_argument("isolation forest: no values");
  }
  if (params.trees == 0 || params.subsample == 0) {
    throw std::invalid_argument("isolation forest: trees and subsample must be positive");
  }
  const std::size_t psi = std::min(params.subsample, values.size());
  c_psi_ = std::max(average_path_length(psi), 1.0);
  const std::size_t height_limit = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(psi, 2)))));

  trees_.reserve(params.trees);
  for (std::size_t t = 0; t < params.trees; ++t) {
    RngStream rng(derive_seed(params.seed, "iforest-tree", t));
    std::vector<double> sample;
    sample.reserve(psi);
    if (psi == values.size()) {
      sample.assign(values.begin(), values.end());
    } else {
      // Partial Fisher-Yates over an index vector keeps the draw
      // without-replacement and deterministic.
      std::vector<std::size_t> idx(values.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < psi; ++i) {
        const std::size_t j = i + rng.uniform_int(idx.size() - i);
        std::swap(idx[i], idx[j]);
        sample.push_back(values[idx[i]]);
      }
    }
    std::vector<Node> tree;
    build(tree, sample, 0, sample.size(), 0, height_limit, rng);
    trees_.push_back(std::move(tree));
  }
}

std::int32_t IsolationForest::build(std::vector<Node>& tree,
                                    std::vector<double>& values,
                                    std::size_t begin, std::size_t end,
                                    std::size_t depth,
                                    std::size_t height_limit, RngStream& rng) {
  const std::size_t count = end - begin;
  const auto [lo_it, hi_it] =
      std::minmax_element(values.begin() + static_cast<std::ptrdiff_t>(begin),
                          values.begin() + static_cast<std::ptrdiff_t>(end));
  if (depth >= height_limit || count <= 1 || *lo_it == *hi_it) {
    tree.push_back({0.0, -1, -1, static_cast<std::uint32_t>(count)});
    return static_cast<std::int32_t>(tree.size() - 1);
  }
  const double split = rng.uniform(*lo_it, *hi_it);
  auto mid_it = std::partition(
      values.begin() + static_cast<std::ptrdiff_t>(begin),
      values.begin() + static_cast<std::ptrdiff_t>(end),
      [split](double v) { return v < split; });
  std::size_t mid = static_cast<std::size_t>(mid_it - values.begin());
  // A cut at the exact minimum leaves one side empty; nudge one element over
  // so both children make progress.
  if (mid == begin) ++mid;
  if (mid == end) --mid;
  const std::int32_t left =
      build(tree, values, begin, mid, depth + 1, height_limit, rng);
  const std::int32_t right =
      build(tree, values, mid, end, depth + 1, height_limit, rng);
  tree.push_back({split, left, right, static_cast<std::uint32_t>(count)});
  return static_cast<std::int32_t>(tree.size() - 1);
}

double IsolationForest::mean_path_length(double v) const {
  double total = 0.0;
  for (const auto& tree : trees_) {
    std::int32_t node = static_cast<std::int32_t>(tree.size()) - 1;
    double depth = 0.0;
    while (tree[static_cast<std::size_t>(node)].left != -1) {
      const Node& n = tree[static_cast<std::size_t>(node)];
      node = v < n.split ? n.left : n.right;
      depth += 1.0;
    }
    depth += average_path_length(tree[static_cast<std::size_t>(node)].size);
    total += depth;
  }
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::isolation_score(double v) const {
  return std::pow(2.0, -mean_path_length(v) / c_psi_);
}

double IsolationForest::outlier_score(double v) const {
  // Centering chosen from measured score quantiles on smooth unimodal
  // corpora: the in-distribution body stays below ~0.68 while clearly
  // isolated points land at 0.72+. Subtracting 0.58 puts ordinary values
  // at or near zero and keeps the default cutoff of 0.1 selective.
  return std::max(0.0, isolation_score(v) - kScoreCenter);
}

}  // namespace pdsnet
