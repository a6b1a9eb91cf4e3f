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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "pdsnet/dataio.hpp"
#include "pdsnet/iforest.hpp"
#include "pdsnet/rng.hpp"

using namespace pdsnet;

namespace {

Dataset dataset_from_rts(const std::vector<double>& rts) {
  Dataset ds;
  ds.n_users = rts.size();
  ds.n_services = 1;
  for (std::size_t i = 0; i < rts.size(); ++i) {
    QoSRecord rec;
    rec.user_id = static_cast<std::uint32_t>(i);
    rec.service_id = 0;
    rec.rt = rts[i];
    ds.records.push_back(rec);
  }
  return ds;
}

}  // namespace

TEST_SUITE_BEGIN("iforest");

TEST_CASE("average path length follows the harmonic-number formula") {
  CHECK(average_path_length(0) == 0.0);
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == 1.0);
  // 2 (ln 255 + gamma) - 2 * 255 / 256 for the default subsample size.
  CHECK(average_path_length(256) ==
        doctest::Approx(2.0 * (std::log(255.0) + 0.5772156649) -
                        2.0 * 255.0 / 256.0)
            .epsilon(1e-12));
  CHECK(average_path_length(100) > average_path_length(50));
}

TEST_CASE("identical values give the midpoint score and are never removed") {
  std::vector<double> values(500, 0.25);
  IsolationForest forest(values, {100, 256, 9});
  CHECK(forest.isolation_score(0.25) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(forest.outlier_score(0.25) == doctest::Approx(0.0).epsilon(1e-12));

  Dataset ds = dataset_from_rts(values);
  Dataset kept = filter_outliers_iforest(ds, 0.1, 100, 256, 9);
  CHECK(kept.records.size() == ds.records.size());
}

TEST_CASE("uniform response times are almost entirely retained") {
  RngStream rng(2001);
  std::vector<double> values(2000);
  for (double& v : values) v = rng.uniform(0.05, 1.0);
  Dataset ds = dataset_from_rts(values);
  Dataset kept = filter_outliers_iforest(ds, 0.1, 100, 256, 13);
  CHECK(static_cast<double>(kept.records.size()) >=
        0.99 * static_cast<double>(ds.records.size()));
}

TEST_CASE("a single extreme response time is isolated and removed") {
  RngStream rng(2002);
  std::vector<double> values(999);
  for (double& v : values) v = rng.uniform(0.05, 0.9);
  values.push_back(1000.0);
  IsolationForest forest(values, {100, 256, 17});
  CHECK(forest.outlier_score(1000.0) > 0.1);
  CHECK(forest.outlier_score(1000.0) > forest.outlier_score(0.5));

  Dataset ds = dataset_from_rts(values);
  Dataset kept = filter_outliers_iforest(ds, 0.1, 100, 256, 17);
  bool extreme_survives = false;
  for (const QoSRecord& rec : kept.records) {
    if (rec.rt == 1000.0) extreme_survives = true;
  }
  CHECK(!extreme_survives);
  CHECK(kept.records.size() < ds.records.size());
  CHECK(static_cast<double>(kept.records.size()) >=
        0.9 * static_cast<double>(ds.records.size()));
}

TEST_CASE("threshold one removes nothing") {
  RngStream rng(2003);
  std::vector<double> values(500);
  for (double& v : values) v = std::exp(rng.normal(0.0, 2.0));
  Dataset ds = dataset_from_rts(values);
  Dataset kept = filter_outliers_iforest(ds, 1.0, 100, 256, 19);
  CHECK(kept.records.size() == ds.records.size());
}

TEST_CASE("small inputs fall back to full-data trees") {
  std::vector<double> values = {0.1, 0.2, 0.3, 0.4, 50.0};
  IsolationForest forest(values, {100, 256, 23});
  CHECK(forest.outlier_score(50.0) > forest.outlier_score(0.2));
}

TEST_CASE("filtering is deterministic per seed") {
  RngStream rng(2005);
  std::vector<double> values(800);
  for (double& v : values) v = std::exp(rng.normal(-1.0, 1.0));
  Dataset ds = dataset_from_rts(values);
  Dataset a = filter_outliers_iforest(ds, 0.1, 50, 128, 29);
  Dataset b = filter_outliers_iforest(ds, 0.1, 50, 128, 29);
  CHECK(a.records == b.records);
}

TEST_CASE("threshold is validated") {
  Dataset ds = dataset_from_rts({0.1, 0.2, 0.3});
  CHECK_THROWS_AS(filter_outliers_iforest(ds, 0.0, 10, 8, 1), DataError);
  CHECK_THROWS_AS(filter_outliers_iforest(ds, 1.5, 10, 8, 1), DataError);
}

TEST_SUITE_END();
