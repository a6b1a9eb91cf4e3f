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

#ifndef PDSNET_IFOREST_HPP_
#define PDSNET_IFOREST_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pdsnet/rng.hpp"

namespace pdsnet {

struct IsolationForestParams {
  std::size_t trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;
};

/// Baseline subtracted from the raw isolation score so that in-distribution
/// values score near zero while isolated extremes clear small cutoffs.
inline constexpr double kScoreCenter = 0.58;

/// Expected unsuccessful-search path length of a binary search tree with n
/// external nodes; the normalizer of the isolation score.
double average_path_length(std::size_t n);

/// Isolation forest over scalar values. Trees are grown on without-replacement
/// subsamples of at most `subsample` points (the full set when fewer exist),
/// splitting at uniform-random cut points until isolation, a constant block,
/// or the ceil(log2 subsample) height limit.
class IsolationForest {
 public:
  IsolationForest(std::span<const double> values,
                  const IsolationForestParams& params);

  /// Mean path length of v over all trees.
  double mean_path_length(double v) const;
  /// Classic score 2^(-E[h]/c(psi)) in (0, 1); ~0.5 for ordinary points.
  double isolation_score(double v) const;
  /// Anomaly-positive score: max(0, isolation_score - kScoreCenter).
  double outlier_score(double v) const;

 private:
  struct Node {
    double split = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;
  };

  std::int32_t build(std::vector<Node>& tree, std::vector<double>& values,
                     std::size_t begin, std::size_t end, std::size_t depth,
                     std::size_t height_limit, RngStream& rng);

  std::vector<std::vector<Node>> trees_;
  double c_psi_ = 1.0;
};

}  // namespace pdsnet

#endif  // PDSNET_IFOREST_HPP_
