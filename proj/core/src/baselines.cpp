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

#include "pdsnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdsnet {

namespace {

constexpr std::size_t kNoService = std::numeric_limits<std::size_t>::max();

struct Neighbor {
  std::size_t index;
  double sim;
};

/// Keeps the top_k highest-similarity entries, ties toward the lower index.
void select_top_k(std::vector<Neighbor>& neighbors, std::size_t top_k) {
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.sim > b.sim || (a.sim == b.sim && a.index < b.index);
  };
  if (neighbors.size() > top_k) {
    std::partial_sort(neighbors.begin(),
                      neighbors.begin() + static_cast<std::ptrdiff_t>(top_k),
                      neighbors.end(), better);
    neighbors.resize(top_k);
  } else {
    std::sort(neighbors.begin(), neighbors.end(), better);
  }
}

}  // namespace

RatingMatrix::RatingMatrix(std::size_t users, std::size_t services)
    : n_users(users),
      n_services(services),
      values(users * services, 0.0),
      observed(users * services, 0) {}

void RatingMatrix::set(std::size_t u, std::size_t s, double rt) {
  if (u >= n_users || s >= n_services)
    throw std::out_of_range("RatingMatrix::set: index out of range");
  if (!(rt > 0.0))
    throw std::invalid_argument(
        "RatingMatrix::set: observed values must be positive");
  values[u * n_services + s] = rt;
  observed[u * n_services + s] = 1;
}

double RatingMatrix::global_mean() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (observed[i]) {
      sum += values[i];
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

double RatingMatrix::user_mean(std::size_t u) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < n_services; ++s) {
    if (is_observed(u, s)) {
      sum += value(u, s);
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

double RatingMatrix::service_mean(std::size_t s) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t u = 0; u < n_users; ++u) {
    if (is_observed(u, s)) {
      sum += value(u, s);
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

RatingMatrix matrix_from_records(std::span<const QoSRecord> records,
                                 std::size_t n_users, std::size_t n_services) {
  RatingMatrix m(n_users, n_services);
  for (const QoSRecord& r : records) m.set(r.user_id, r.service_id, r.rt);
  return m;
}

MaskedVector user_row(const RatingMatrix& m, std::size_t u) {
  if (u >= m.n_users) throw std::out_of_range("user_row: index out of range");
  MaskedVector v;
  v.values.assign(m.values.begin() + static_cast<std::ptrdiff_t>(u * m.n_services),
                  m.values.begin() +
                      static_cast<std::ptrdiff_t>((u + 1) * m.n_services));
  v.observed.assign(
      m.observed.begin() + static_cast<std::ptrdiff_t>(u * m.n_services),
      m.observed.begin() + static_cast<std::ptrdiff_t>((u + 1) * m.n_services));
  return v;
}

MaskedVector service_column(const RatingMatrix& m, std::size_t s) {
  if (s >= m.n_services)
    throw std::out_of_range("service_column: index out of range");
  MaskedVector v;
  v.values.resize(m.n_users);
  v.observed.resize(m.n_users);
  for (std::size_t u = 0; u < m.n_users; ++u) {
    v.values[u] = m.value(u, s);
    v.observed[u] = m.observed[u * m.n_services + s];
  }
  return v;
}

double pearson_sim(const MaskedVector& a, const MaskedVector& b) {
  if (a.values.size() != b.values.size() ||
      a.values.size() != a.observed.size() ||
      b.values.size() != b.observed.size())
    throw std::invalid_argument("pearson_sim: length mismatch");
  double sum_a = 0.0, sum_b = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.observed[i] && b.observed[i]) {
      sum_a += a.values[i];
      sum_b += b.values[i];
      ++n;
    }
  }
  if (n < 2) return 0.0;
  const double mean_a = sum_a / static_cast<double>(n);
  const double mean_b = sum_b / static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.observed[i] && b.observed[i]) {
      const double da = a.values[i] - mean_a;
      const double db = b.values[i] - mean_b;
      cov += da * db;
      var_a += da * da;
      var_b += db * db;
    }
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

std::optional<double> upcc_predict(const RatingMatrix& m, std::size_t u,
                                   std::size_t s, std::size_t top_k) {
  if (u >= m.n_users || s >= m.n_services)
    throw std::out_of_range("upcc_predict: index out of range");
  const double mean_u = m.user_mean(u);
  if (std::isnan(mean_u)) return std::nullopt;
  const MaskedVector row_u = user_row(m, u);
  std::vector<Neighbor> neighbors;
  for (std::size_t v = 0; v < m.n_users; ++v) {
    if (v == u || !m.is_observed(v, s)) continue;
    const double sim = pearson_sim(row_u, user_row(m, v));
    if (sim > 0.0) neighbors.push_back({v, sim});
  }
  if (neighbors.empty() || top_k == 0) return std::nullopt;
  select_top_k(neighbors, top_k);
  double num = 0.0, den = 0.0;
  for (const Neighbor& nb : neighbors) {
    num += nb.sim * (m.value(nb.index, s) - m.user_mean(nb.index));
    den += nb.sim;
  }
  return mean_u + num / den;
}

std::optional<double> ipcc_predict(const RatingMatrix& m, std::size_t u,
                                   std::size_t s, std::size_t top_k) {
  if (u >= m.n_users || s >= m.n_services)
    throw std::out_of_range("ipcc_predict: index out of range");
  const double mean_s = m.service_mean(s);
  if (std::isnan(mean_s)) return std::nullopt;
  const MaskedVector col_s = service_column(m, s);
  std::vector<Neighbor> neighbors;
  for (std::size_t t = 0; t < m.n_services; ++t) {
    if (t == s || !m.is_observed(u, t)) continue;
    const double sim = pearson_sim(col_s, service_column(m, t));
    if (sim > 0.0) neighbors.push_back({t, sim});
  }
  if (neighbors.empty() || top_k == 0) return std::nullopt;
  select_top_k(neighbors, top_k);
  double num = 0.0, den = 0.0;
  for (const Neighbor& nb : neighbors) {
    num += nb.sim * (m.value(u, nb.index) - m.service_mean(nb.index));
    den += nb.sim;
  }
  return mean_s + num / den;
}

double uipcc_predict(const RatingMatrix& m, std::size_t u, std::size_t s,
                     double w, std::size_t top_k) {
  if (!(w >= 0.0 && w <= 1.0))
    throw std::invalid_argument("uipcc_predict: blend weight must be in [0, 1]");
  const std::optional<double> up = upcc_predict(m, u, s, top_k);
  const std::optional<double> ip = ipcc_predict(m, u, s, top_k);
  if (up && ip) return w * *up + (1.0 - w) * *ip;
  if (up) return *up;
  if (ip) return *ip;
  return m.global_mean();
}

UpccScorer::UpccScorer(const RatingMatrix& m)
    : matrix_(m), n_users_(m.n_users) {
  means_.resize(n_users_);
  std::vector<MaskedVector> rows;
  rows.reserve(n_users_);
  for (std::size_t u = 0; u < n_users_; ++u) {
    means_[u] = m.user_mean(u);
    rows.push_back(user_row(m, u));
  }
  sims_.assign(n_users_ * n_users_, 0.0);
  for (std::size_t u = 0; u < n_users_; ++u) {
    for (std::size_t v = u + 1; v < n_users_; ++v) {
      const double sim = pearson_sim(rows[u], rows[v]);
      sims_[u * n_users_ + v] = sim;
      sims_[v * n_users_ + u] = sim;
    }
  }
}

std::optional<double> UpccScorer::predict(std::size_t u, std::size_t s,
                                          std::size_t top_k) const {
  const RatingMatrix& m = matrix_;
  if (u >= m.n_users || s >= m.n_services)
    throw std::out_of_range("UpccScorer::predict: index out of range");
  if (std::isnan(means_[u])) return std::nullopt;
  std::vector<Neighbor> neighbors;
  for (std::size_t v = 0; v < n_users_; ++v) {
    if (v == u || !m.is_observed(v, s)) continue;
    const double sim = sims_[u * n_users_ + v];
    if (sim > 0.0) neighbors.push_back({v, sim});
  }
  if (neighbors.empty() || top_k == 0) return std::nullopt;
  select_top_k(neighbors, top_k);
  double num = 0.0, den = 0.0;
  for (const Neighbor& nb : neighbors) {
    num += nb.sim * (m.value(nb.index, s) - means_[nb.index]);
    den += nb.sim;
  }
  return means_[u] + num / den;
}

IpccScorer::IpccScorer(const RatingMatrix& m)
    : matrix_(m), cached_service_(kNoService) {
  means_.resize(m.n_services);
  for (std::size_t s = 0; s < m.n_services; ++s) means_[s] = m.service_mean(s);
}

std::optional<double> IpccScorer::predict(std::size_t u, std::size_t s,
                                          std::size_t top_k) const {
  const RatingMatrix& m = matrix_;
  if (u >= m.n_users || s >= m.n_services)
    throw std::out_of_range("IpccScorer::predict: index out of range");
  if (std::isnan(means_[s])) return std::nullopt;
  if (cached_service_ != s) {
    const MaskedVector col_s = service_column(m, s);
    cached_sims_.assign(m.n_services, 0.0);
    for (std::size_t t = 0; t < m.n_services; ++t) {
      if (t == s) continue;
      cached_sims_[t] = pearson_sim(col_s, service_column(m, t));
    }
    cached_service_ = s;
  }
  std::vector<Neighbor> neighbors;
  for (std::size_t t = 0; t < m.n_services; ++t) {
    if (t == s || !m.is_observed(u, t)) continue;
    const double sim = cached_sims_[t];
    if (sim > 0.0) neighbors.push_back({t, sim});
  }
  if (neighbors.empty() || top_k == 0) return std::nullopt;
  select_top_k(neighbors, top_k);
  double num = 0.0, den = 0.0;
  for (const Neighbor& nb : neighbors) {
    num += nb.sim * (m.value(u, nb.index) - means_[nb.index]);
    den += nb.sim;
  }
  return means_[s] + num / den;
}

}  // namespace pdsnet
