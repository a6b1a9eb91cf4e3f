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

#include "pdsnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace pdsnet {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty()) throw std::invalid_argument("metrics need at least one pair");
  if (y.size() != yhat.size())
    throw std::invalid_argument("metric input lengths differ");
}

SubsetMetrics subset_metrics(std::span<const double> y,
                             std::span<const double> yhat,
                             std::span<const std::size_t> idx) {
  SubsetMetrics out;
  out.count = idx.size();
  if (idx.empty()) return out;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i : idx) {
    const double d = y[i] - yhat[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  out.mae = abs_sum / static_cast<double>(idx.size());
  out.rmse = std::sqrt(sq_sum / static_cast<double>(idx.size()));
  return out;
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - yhat[i]);
  return sum / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(y.size()));
}

EvalReport build_report(std::string dataset_tag, std::string method,
                        std::string fingerprint,
                        std::span<const QoSRecord> records,
                        std::span<const double> predictions,
                        std::span<const std::uint32_t> corrupted_users,
                        double wall_seconds) {
  if (records.size() != predictions.size())
    throw std::invalid_argument("prediction count does not match records");
  std::vector<double> y;
  y.reserve(records.size());
  for (const QoSRecord& r : records) y.push_back(r.rt);

  std::vector<std::size_t> all_idx(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) all_idx[i] = i;
  std::vector<std::size_t> missing_idx;
  std::vector<std::size_t> corrupted_idx;
  const std::unordered_set<std::uint32_t> flagged(corrupted_users.begin(),
                                                  corrupted_users.end());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const QoSRecord& r = records[i];
    if (std::any_of(r.features.begin(), r.features.end(),
                    [](std::uint32_t f) { return f == Vocabulary::kMissingId; }))
      missing_idx.push_back(i);
    if (flagged.count(r.user_id) != 0) corrupted_idx.push_back(i);
  }

  EvalReport report;
  report.dataset_tag = std::move(dataset_tag);
  report.method = std::move(method);
  report.fingerprint = std::move(fingerprint);
  report.wall_seconds = wall_seconds;
  report.all = subset_metrics(y, predictions, all_idx);
  report.missing_feature = subset_metrics(y, predictions, missing_idx);
  report.corrupted_user = subset_metrics(y, predictions, corrupted_idx);
  return report;
}

std::string eval_report_csv_header() {
  return "dataset,method,fingerprint,wall_seconds,count,mae,rmse,"
         "missing_count,missing_mae,missing_rmse,"
         "corrupted_count,corrupted_mae,corrupted_rmse";
}

std::string eval_report_csv_row(const EvalReport& r) {
  std::string out;
  out += r.dataset_tag;
  out += ',';
  out += r.method;
  out += ',';
  out += r.fingerprint;
  out += ',';
  out += format_double(r.wall_seconds);
  auto subset = [&out](const SubsetMetrics& m) {
    out += ',';
    out += std::to_string(m.count);
    out += ',';
    out += format_double(m.mae);
    out += ',';
    out += format_double(m.rmse);
  };
  subset(r.all);
  subset(r.missing_feature);
  subset(r.corrupted_user);
  return out;
}

}  // namespace pdsnet
