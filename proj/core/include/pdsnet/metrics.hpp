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

#ifndef PDSNET_METRICS_HPP_
#define PDSNET_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdsnet/dataio.hpp"

namespace pdsnet {

/// Mean absolute error. Throws std::invalid_argument on empty or
/// mismatched inputs.
double mae(std::span<const double> y, std::span<const double> yhat);

/// Root mean squared error; same preconditions as mae.
double rmse(std::span<const double> y, std::span<const double> yhat);

struct SubsetMetrics {
  std::size_t count = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  std::string dataset_tag;
  std::string method;
  std::string fingerprint;
  double wall_seconds = 0.0;
  SubsetMetrics all;
  SubsetMetrics missing_feature;
  SubsetMetrics corrupted_user;
};

/// Aggregates errors over the whole split plus the records with any
/// MISSING feature and the records of flagged users. Empty subsets keep
/// zero counts and zero metrics.
EvalReport build_report(std::string dataset_tag, std::string method,
                        std::string fingerprint,
                        std::span<const QoSRecord> records,
                        std::span<const double> predictions,
                        std::span<const std::uint32_t> corrupted_users,
                        double wall_seconds);

std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& report);

}  // namespace pdsnet

#endif  // PDSNET_METRICS_HPP_
