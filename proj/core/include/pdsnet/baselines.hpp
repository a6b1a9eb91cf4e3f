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

#ifndef PDSNET_BASELINES_HPP_
#define PDSNET_BASELINES_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdsnet/dataio.hpp"

namespace pdsnet {

/// Dense user-by-service response-time matrix with an observation mask.
/// Observed values are strictly positive; unobserved cells hold 0.
struct RatingMatrix {
  std::size_t n_users = 0;
  std::size_t n_services = 0;
  std::vector<double> values;   // row-major [n_users x n_services]
  std::vector<char> observed;   // same layout, 1 iff the cell is observed

  RatingMatrix() = default;
  RatingMatrix(std::size_t users, std::size_t services);

  double value(std::size_t u, std::size_t s) const {
    return values[u * n_services + s];
  }
  bool is_observed(std::size_t u, std::size_t s) const {
    return observed[u * n_services + s] != 0;
  }
  /// Marks (u, s) observed. Rejects rt <= 0 and out-of-range indices.
  void set(std::size_t u, std::size_t s, double rt);

  /// Mean of all observed values; NaN when nothing is observed.
  double global_mean() const;
  /// Mean of user u's observed values; NaN when the row is empty.
  double user_mean(std::size_t u) const;
  /// Mean of service s's observed values; NaN when the column is empty.
  double service_mean(std::size_t s) const;
};

/// Fills a matrix from records; a duplicate (user, service) pair keeps the
/// last record's value.
RatingMatrix matrix_from_records(std::span<const QoSRecord> records,
                                 std::size_t n_users, std::size_t n_services);

/// A vector paired with its observation mask, as one matrix row or column.
struct MaskedVector {
  std::vector<double> values;
  std::vector<char> observed;
};

MaskedVector user_row(const RatingMatrix& m, std::size_t u);
MaskedVector service_column(const RatingMatrix& m, std::size_t s);

/// Pearson correlation over co-observed positions, with means and variances
/// taken over those positions alone. Fewer than two co-observations or a
/// zero variance on either side yields 0. Result is clamped to [-1, 1].
double pearson_sim(const MaskedVector& a, const MaskedVector& b);

constexpr std::size_t kDefaultTopK = 10;

/// User-based prediction for (u, s): the user's mean plus the
/// similarity-weighted deviation of up to top_k most similar users that
/// observed s, restricted to strictly positive similarity. Ties in
/// similarity break toward the lower index; the target user is never its
/// own neighbor. Abstains (nullopt) when no eligible neighbor exists or u
/// has no observations.
std::optional<double> upcc_predict(const RatingMatrix& m, std::size_t u,
                                   std::size_t s,
                                   std::size_t top_k = kDefaultTopK);

/// Service-based mirror of upcc_predict, over columns instead of rows.
std::optional<double> ipcc_predict(const RatingMatrix& m, std::size_t u,
                                   std::size_t s,
                                   std::size_t top_k = kDefaultTopK);

/// Blend w * UPCC + (1 - w) * IPCC. When one side abstains the other is
/// returned alone; when both abstain, the global mean of the matrix.
/// Requires w in [0, 1].
double uipcc_predict(const RatingMatrix& m, std::size_t u, std::size_t s,
                     double w = 0.5, std::size_t top_k = kDefaultTopK);

/// Precomputed user-based scorer: caches per-user means and the full
/// user-user similarity matrix so bulk evaluation does not rescan the
/// ratings per query. Agrees exactly with upcc_predict.
class UpccScorer {
 public:
  explicit UpccScorer(const RatingMatrix& m);

  std::optional<double> predict(std::size_t u, std::size_t s,
                                std::size_t top_k = kDefaultTopK) const;
  double sim(std::size_t u, std::size_t v) const {
    return sims_[u * n_users_ + v];
  }

 private:
  const RatingMatrix& matrix_;
  std::size_t n_users_;
  std::vector<double> means_;
  std::vector<double> sims_;
};

/// Precomputed service-based scorer. The service-service similarity matrix
/// can dwarf memory on wide corpora, so only the most recent target
/// service's similarity row is kept; group queries by service for bulk use.
/// Agrees exactly with ipcc_predict.
class IpccScorer {
 public:
  explicit IpccScorer(const RatingMatrix& m);

  std::optional<double> predict(std::size_t u, std::size_t s,
                                std::size_t top_k = kDefaultTopK) const;

 private:
  const RatingMatrix& matrix_;
  std::vector<double> means_;
  mutable std::vector<double> cached_sims_;
  mutable std::size_t cached_service_;
};

}  // namespace pdsnet

#endif  // PDSNET_BASELINES_HPP_
