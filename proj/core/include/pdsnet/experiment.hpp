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

#ifndef PDSNET_EXPERIMENT_HPP_
#define PDSNET_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pdsnet/config.hpp"
#include "pdsnet/dataio.hpp"
#include "pdsnet/metrics.hpp"
#include "pdsnet/training.hpp"

namespace pdsnet {

/// Record sets materialized for one experiment. corrupted_users is filled
/// when the caller knows which users carry corrupted features (synthetic
/// truth or a noise-injection manifest); report subsets stay empty otherwise.
struct PreparedData {
  Dataset dataset;
  std::vector<QoSRecord> train;
  std::vector<QoSRecord> validation;
  std::vector<QoSRecord> test;
  std::vector<std::uint32_t> corrupted_users;
};

/// Splits an in-memory dataset per the data config: a manifest path wins
/// over the density spec.
PreparedData prepare_data(Dataset dataset, const DataConfig& config);

/// Loads the record CSV named by the config, then splits as above.
PreparedData prepare_data(const DataConfig& config);

/// One seeded train-plus-eval run; the seed replaces config.train.seed.
struct RunOutcome {
  TrainResult train_result;
  EvalReport report;
};

RunOutcome run_single(const PreparedData& data, const ExperimentConfig& config,
                      std::uint64_t seed, std::string_view dataset_tag,
                      std::string_view method);

/// Runs seeds base, base+1, ..., base+n-1, at most `jobs` at a time in
/// worker threads. Reports come back in seed order regardless of
/// completion order.
std::vector<EvalReport> run_repeated(const PreparedData& data,
                                     const ExperimentConfig& config,
                                     std::size_t n_seeds, std::size_t jobs,
                                     std::string_view dataset_tag,
                                     std::string_view method);

/// Per-field mean and sample standard deviation (n-1; zero when n < 2)
/// over reports from the same split. Counts are taken from the first
/// report; metric fields are aggregated.
struct ReportAggregate {
  std::size_t n = 0;
  EvalReport mean;
  EvalReport stddev;
};

ReportAggregate aggregate_reports(std::span<const EvalReport> reports);

/// Per-seed rows plus mean and std rows. Wall-clock is deliberately
/// absent: the same seed list must produce byte-identical text.
std::string experiment_report_csv(std::span<const EvalReport> reports,
                                  std::uint64_t base_seed);

/// Memory-based baseline evaluated on the test split; the matrix is built
/// from the training records. Methods: upcc, ipcc, uipcc. Abstentions fall
/// back to the training global mean.
EvalReport run_baseline(const PreparedData& data, std::string_view method,
                        std::size_t top_k, double blend,
                        std::string_view dataset_tag);

/// One grid point of a hyperparameter sweep.
struct SweepPoint {
  double value = 0.0;
  std::vector<EvalReport> reports;
};

/// Sweeps "delta" (conditional-loss threshold) or "N" (latent width) over
/// the given values, n_seeds runs each.
std::vector<SweepPoint> run_sweep(const PreparedData& data,
                                  const ExperimentConfig& base_config,
                                  std::string_view param,
                                  std::span<const double> values,
                                  std::size_t n_seeds, std::size_t jobs,
                                  std::string_view dataset_tag);

std::string sweep_report_csv(std::string_view param,
                             std::span<const SweepPoint> points);

/// Runs every ablation variant with the same data and seeds. Methods are
/// reported as "pdsnet", "pdsnet-no_prob", "pdsnet-no_deep_sup".
struct AblationRun {
  Ablation ablation = Ablation::kFull;
  std::string method;
  std::vector<EvalReport> reports;
};

std::vector<AblationRun> run_ablations(const PreparedData& data,
                                       const ExperimentConfig& config,
                                       std::size_t n_seeds, std::size_t jobs,
                                       std::string_view dataset_tag);

}  // namespace pdsnet

#endif  // PDSNET_EXPERIMENT_HPP_
