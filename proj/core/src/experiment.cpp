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

#include "pdsnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "pdsnet/baselines.hpp"
#include "pdsnet/model.hpp"
#include "pdsnet/rng.hpp"

namespace pdsnet {

namespace {

/// Runs tasks 0..count-1 on up to `jobs` threads; the first exception wins
/// and is rethrown after all workers drain.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  if (jobs == 0) jobs = 1;
  jobs = std::min(jobs, count);
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

double wall_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

SubsetMetrics aggregate_subset(std::span<const EvalReport> reports,
                               SubsetMetrics EvalReport::*field,
                               bool stddev) {
  SubsetMetrics out = reports.front().*field;
  const double n = static_cast<double>(reports.size());
  double sum_mae = 0.0, sum_rmse = 0.0;
  for (const EvalReport& r : reports) {
    sum_mae += (r.*field).mae;
    sum_rmse += (r.*field).rmse;
  }
  const double mean_mae = sum_mae / n;
  const double mean_rmse = sum_rmse / n;
  if (!stddev) {
    out.mae = mean_mae;
    out.rmse = mean_rmse;
    return out;
  }
  if (reports.size() < 2) {
    out.mae = 0.0;
    out.rmse = 0.0;
    return out;
  }
  double ss_mae = 0.0, ss_rmse = 0.0;
  for (const EvalReport& r : reports) {
    ss_mae += ((r.*field).mae - mean_mae) * ((r.*field).mae - mean_mae);
    ss_rmse += ((r.*field).rmse - mean_rmse) * ((r.*field).rmse - mean_rmse);
  }
  out.mae = std::sqrt(ss_mae / (n - 1.0));
  out.rmse = std::sqrt(ss_rmse / (n - 1.0));
  return out;
}

void append_report_row(std::ostringstream& out, std::string_view seed_label,
                       const EvalReport& r) {
  out << seed_label << ',' << r.dataset_tag << ',' << r.method << ','
      << r.fingerprint << ',' << r.all.count << ','
      << format_double(r.all.mae) << ',' << format_double(r.all.rmse) << ','
      << r.missing_feature.count << ',' << format_double(r.missing_feature.mae)
      << ',' << format_double(r.missing_feature.rmse) << ','
      << r.corrupted_user.count << ',' << format_double(r.corrupted_user.mae)
      << ',' << format_double(r.corrupted_user.rmse) << '\n';
}

}  // namespace

PreparedData prepare_data(Dataset dataset, const DataConfig& config) {
  config.validate();
  PreparedData out;
  SplitResult split;
  if (!config.manifest.empty()) {
    SplitManifest manifest = load_split_manifest(config.manifest);
    for (const auto* part :
         {&manifest.split.train, &manifest.split.test,
          &manifest.split.validation}) {
      for (const std::size_t index : *part) {
        if (index >= dataset.records.size())
          throw DataError("split manifest index " + std::to_string(index) +
                          " is out of range for " +
                          std::to_string(dataset.records.size()) + " records");
      }
    }
    split = std::move(manifest.split);
  } else {
    split = split_by_density(dataset.records,
                             SplitSpec::from_density(config.density,
                                                     config.split_seed));
  }
  out.train = take_records(dataset.records, split.train);
  out.validation = take_records(dataset.records, split.validation);
  out.test = take_records(dataset.records, split.test);
  out.dataset = std::move(dataset);
  return out;
}

PreparedData prepare_data(const DataConfig& config) {
  if (config.records.empty())
    throw ConfigError("data.records is required to prepare data");
  return prepare_data(load_records_csv(config.records), config);
}

RunOutcome run_single(const PreparedData& data, const ExperimentConfig& config,
                      std::uint64_t seed, std::string_view dataset_tag,
                      std::string_view method) {
  // The fingerprint identifies the configuration; the per-rep seed lives in
  // its own report column.
  const std::string fingerprint = config_fingerprint(config);
  ExperimentConfig run_config = config;
  run_config.train.seed = seed;
  set_vocab_sizes(run_config.model, data.dataset);

  const auto start = std::chrono::steady_clock::now();
  RunOutcome out{train(data.train, data.validation, run_config.model,
                       run_config.train),
                 {}};
  std::vector<double> predictions;
  if (!data.test.empty()) {
    RngStream rng(derive_seed(seed, "test-draw"));
    predictions = out.train_result.model.predict(data.test, rng,
                                                 run_config.train.eval_use_mean);
  }
  out.report = build_report(std::string(dataset_tag), std::string(method),
                            fingerprint, data.test,
                            predictions, data.corrupted_users,
                            wall_since(start));
  return out;
}

std::vector<EvalReport> run_repeated(const PreparedData& data,
                                     const ExperimentConfig& config,
                                     std::size_t n_seeds, std::size_t jobs,
                                     std::string_view dataset_tag,
                                     std::string_view method) {
  std::vector<EvalReport> reports(n_seeds);
  parallel_for(n_seeds, jobs, [&](std::size_t i) {
    reports[i] = run_single(data, config, config.train.seed + i, dataset_tag,
                            method)
                     .report;
  });
  return reports;
}

ReportAggregate aggregate_reports(std::span<const EvalReport> reports) {
  if (reports.empty())
    throw std::invalid_argument("aggregate_reports: no reports");
  ReportAggregate out;
  out.n = reports.size();
  out.mean = reports.front();
  out.stddev = reports.front();
  double wall = 0.0;
  for (const EvalReport& r : reports) wall += r.wall_seconds;
  out.mean.wall_seconds = wall / static_cast<double>(reports.size());
  out.stddev.wall_seconds = 0.0;
  for (const auto field :
       {&EvalReport::all, &EvalReport::missing_feature,
        &EvalReport::corrupted_user}) {
    out.mean.*field = aggregate_subset(reports, field, false);
    out.stddev.*field = aggregate_subset(reports, field, true);
  }
  return out;
}

std::string experiment_report_csv(std::span<const EvalReport> reports,
                                  std::uint64_t base_seed) {
  std::ostringstream out;
  out << "seed,dataset,method,fingerprint,count,mae,rmse,missing_count,"
         "missing_mae,missing_rmse,corrupted_count,corrupted_mae,"
         "corrupted_rmse\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    append_report_row(out, std::to_string(base_seed + i), reports[i]);
  }
  if (!reports.empty()) {
    const ReportAggregate agg = aggregate_reports(reports);
    append_report_row(out, "mean", agg.mean);
    append_report_row(out, "std", agg.stddev);
  }
  return out.str();
}

EvalReport run_baseline(const PreparedData& data, std::string_view method,
                        std::size_t top_k, double blend,
                        std::string_view dataset_tag) {
  if (data.train.empty()) throw DataError("baseline: training split is empty");
  const auto start = std::chrono::steady_clock::now();
  const RatingMatrix matrix = matrix_from_records(
      data.train, data.dataset.n_users, data.dataset.n_services);
  const double fallback = matrix.global_mean();
  std::vector<double> predictions;
  predictions.reserve(data.test.size());
  if (method == "upcc") {
    const UpccScorer scorer(matrix);
    for (const QoSRecord& r : data.test)
      predictions.push_back(
          scorer.predict(r.user_id, r.service_id, top_k).value_or(fallback));
  } else if (method == "ipcc") {
    // Group queries by service so the scorer's one-row similarity cache hits.
    std::vector<std::size_t> order(data.test.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return data.test[a].service_id < data.test[b].service_id;
                     });
    const IpccScorer scorer(matrix);
    predictions.assign(data.test.size(), 0.0);
    for (const std::size_t i : order) {
      const QoSRecord& r = data.test[i];
      predictions[i] =
          scorer.predict(r.user_id, r.service_id, top_k).value_or(fallback);
    }
  } else if (method == "uipcc") {
    for (const QoSRecord& r : data.test)
      predictions.push_back(
          uipcc_predict(matrix, r.user_id, r.service_id, blend, top_k));
  } else {
    throw ConfigError("unknown baseline method '" + std::string(method) +
                      "' (expected upcc, ipcc, or uipcc)");
  }
  std::string label(method);
  return build_report(std::string(dataset_tag), label,
                      "top_k=" + std::to_string(top_k),
                      data.test, predictions, data.corrupted_users,
                      wall_since(start));
}

std::vector<SweepPoint> run_sweep(const PreparedData& data,
                                  const ExperimentConfig& base_config,
                                  std::string_view param,
                                  std::span<const double> values,
                                  std::size_t n_seeds, std::size_t jobs,
                                  std::string_view dataset_tag) {
  if (param != "delta" && param != "N")
    throw ConfigError("unknown sweep parameter '" + std::string(param) +
                      "' (expected delta or N)");
  std::vector<SweepPoint> points(values.size());
  // Flatten (value, seed) into one task list so jobs saturate across the
  // whole grid.
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t v = 0; v < values.size(); ++v) {
    points[v].value = values[v];
    points[v].reports.resize(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) tasks.push_back({v, s});
  }
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const auto [v, s] = tasks[i];
    ExperimentConfig config = base_config;
    if (param == "delta") {
      config.train.delta = values[v];
    } else {
      if (values[v] < 1.0 ||
          values[v] != std::floor(values[v]))
        throw ConfigError("sweep value for N must be a positive integer");
      config.model.latent_dim = static_cast<std::size_t>(values[v]);
    }
    points[v].reports[s] = run_single(data, config, config.train.seed + s,
                                      dataset_tag, "pdsnet")
                               .report;
  });
  return points;
}

std::string sweep_report_csv(std::string_view param,
                             std::span<const SweepPoint> points) {
  std::ostringstream out;
  out << "param,value,seeds,mean_mae,std_mae,mean_rmse,std_rmse,"
         "mean_missing_mae,mean_corrupted_mae\n";
  for (const SweepPoint& point : points) {
    const ReportAggregate agg = aggregate_reports(point.reports);
    out << param << ',' << format_double(point.value) << ',' << agg.n << ','
        << format_double(agg.mean.all.mae) << ','
        << format_double(agg.stddev.all.mae) << ','
        << format_double(agg.mean.all.rmse) << ','
        << format_double(agg.stddev.all.rmse) << ','
        << format_double(agg.mean.missing_feature.mae) << ','
        << format_double(agg.mean.corrupted_user.mae) << '\n';
  }
  return out.str();
}

std::vector<AblationRun> run_ablations(const PreparedData& data,
                                       const ExperimentConfig& config,
                                       std::size_t n_seeds, std::size_t jobs,
                                       std::string_view dataset_tag) {
  std::vector<AblationRun> runs;
  for (const Ablation ablation :
       {Ablation::kFull, Ablation::kNoProb, Ablation::kNoDeepSup}) {
    AblationRun run;
    run.ablation = ablation;
    run.method = ablation == Ablation::kFull
                     ? "pdsnet"
                     : "pdsnet-" + std::string(to_string(ablation));
    runs.push_back(std::move(run));
  }
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    runs[a].reports.resize(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) tasks.push_back({a, s});
  }
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const auto [a, s] = tasks[i];
    ExperimentConfig run_config = config;
    run_config.model.ablation = runs[a].ablation;
    runs[a].reports[s] = run_single(data, run_config,
                                    run_config.train.seed + s, dataset_tag,
                                    runs[a].method)
                             .report;
  });
  return runs;
}

}  // namespace pdsnet
