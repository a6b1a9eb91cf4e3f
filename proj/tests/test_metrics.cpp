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
#include <vector>

#include "doctest.h"
#include "pdsnet/rng.hpp"

namespace pdsnet {
namespace {

TEST_SUITE("metrics") {

TEST_CASE("identical arrays score zero") {
  std::vector<double> y = {0.3, 1.7, 2.2};
  CHECK(mae(y, y) == 0.0);
  CHECK(rmse(y, y) == 0.0);
}

TEST_CASE("hand-computed values") {
  std::vector<double> y = {1.0, 2.0};
  std::vector<double> yhat = {2.0, 4.0};
  CHECK(mae(y, yhat) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(rmse(y, yhat) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
}

TEST_CASE("mean absolute error ignores pair order") {
  std::vector<double> y = {1.0, 5.0, 2.0, 8.0};
  std::vector<double> yhat = {1.5, 4.0, 2.5, 9.0};
  const double base = mae(y, yhat);
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<double> y2, yhat2;
  for (std::size_t i : perm) {
    y2.push_back(y[i]);
    yhat2.push_back(yhat[i]);
  }
  CHECK(mae(y2, yhat2) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("rmse dominates mae on random arrays") {
  RngStream rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(40);
    std::vector<double> y(n), yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-5.0, 5.0);
      yhat[i] = rng.uniform(-5.0, 5.0);
    }
    CHECK(rmse(y, yhat) >= mae(y, yhat) - 1e-12);
  }
}

TEST_CASE("length mismatch and empty input are rejected") {
  std::vector<double> y = {1.0, 2.0};
  std::vector<double> yhat = {1.0};
  CHECK_THROWS_AS(mae(y, yhat), std::invalid_argument);
  CHECK_THROWS_AS(rmse(y, yhat), std::invalid_argument);
  std::vector<double> empty;
  CHECK_THROWS_AS(mae(empty, empty), std::invalid_argument);
}

TEST_CASE("report splits records into the declared subsets") {
  std::vector<QoSRecord> records;
  std::vector<double> predictions;
  auto push = [&](std::uint32_t user, std::uint32_t city, double rt,
                  double pred) {
    QoSRecord r;
    r.user_id = user;
    r.service_id = 0;
    r.rt = rt;
    r.features = {1, 1, city, 1, 1, 1};
    records.push_back(r);
    predictions.push_back(pred);
  };
  push(0, 1, 1.0, 1.5);
  push(1, 0, 2.0, 2.0);
  push(2, 1, 3.0, 2.0);
  push(2, 0, 4.0, 4.5);
  std::vector<std::uint32_t> corrupted = {2};
  EvalReport report = build_report("synth", "full", "cfg", records,
                                   predictions, corrupted, 0.25);
  CHECK(report.all.count == 4);
  CHECK(report.all.mae == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(report.missing_feature.count == 2);
  CHECK(report.missing_feature.mae == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(report.corrupted_user.count == 2);
  CHECK(report.corrupted_user.mae == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(report.all.rmse >= report.all.mae);
  CHECK(report.wall_seconds == 0.25);
}

TEST_CASE("report rows are stable csv") {
  EvalReport report;
  report.dataset_tag = "d1";
  report.method = "upcc";
  report.fingerprint = "k10";
  report.wall_seconds = 1.5;
  report.all = {3, 0.5, 0.75};
  std::string row = eval_report_csv_row(report);
  CHECK(row == "d1,upcc,k10,1.5,3,0.5,0.75,0,0,0,0,0,0");
  CHECK(eval_report_csv_header().substr(0, 16) == "dataset,method,f");
}

}  // TEST_SUITE

}  // namespace
}  // namespace pdsnet
