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

#ifndef PDSNET_TRAINING_HPP_
#define PDSNET_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pdsnet/model.hpp"
#include "pdsnet/tensor.hpp"

namespace pdsnet {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LossKind { kMae, kMse, kHuber };

LossKind loss_kind_from_string(std::string_view s);
std::string_view to_string(LossKind kind);

struct TrainConfig {
  double delta = 0.5;
  std::array<double, 3> lambdas = {1.0, 0.5, 0.25};
  LossKind loss_kind = LossKind::kMae;
  double huber_transition = 1.0;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  /// Weight of the task terms on untrusted records; the written rule uses 0.
  double untrusted_task_weight = 0.0;
  /// Alignment pulls the priors toward a frozen posterior when set.
  bool stop_posterior_grad = true;
  /// Evaluation substitutes the latent mean for the sampled draw when set.
  bool eval_use_mean = false;

  void validate() const;
};

/// Elementwise error transform of the chosen kind, averaged to a scalar.
ad::Tensor task_loss(ad::Graph& g, const ad::Tensor& y, const ad::Tensor& yhat,
                     LossKind kind, double huber_transition = 1.0);

/// Same transform reduced per record instead: shape [B].
ad::Tensor task_loss_per_record(ad::Graph& g, const ad::Tensor& y,
                                const ad::Tensor& yhat, LossKind kind,
                                double huber_transition = 1.0);

/// Per-record alignment penalties pulling each populated prior toward the
/// posterior: KL divergence normally, squared mean distance under the
/// deterministic-latent variant. Levels without supervision stay empty.
std::array<std::optional<ad::Tensor>, 3> alignment_per_record(
    ad::Graph& g, const ForwardTrace& trace, Ablation ablation,
    bool stop_posterior_grad);

struct HLossResult {
  ad::Tensor loss;
  std::size_t trusted = 0;
  std::size_t untrusted = 0;
  /// 1.0 where the record's residual beat delta, else 0.0.
  std::vector<double> trusted_mask;
  ad::Tensor task1_per_record;
  ad::Tensor task2_per_record;
  std::array<std::optional<ad::Tensor>, 3> align_per_record;
};

/// The conditional objective: records whose main-branch residual is inside
/// delta contribute both branches' task terms; the rest contribute the
/// lambda-weighted alignment terms. Contributions are masked per record and
/// averaged over the batch. The single-level variant trains the task term
/// on every record instead.
HLossResult h_loss(ad::Graph& g, const ForwardTrace& trace,
                   std::span<const double> y, const TrainConfig& config,
                   Ablation ablation);

struct NadamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NadamState {
 public:
  explicit NadamState(const ParamStore& store);
  std::size_t step() const { return step_; }

 private:
  friend void nadam_step(ParamStore&, const BoundParams&, NadamState&, double,
                         const NadamConfig&);
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t step_ = 0;
};

/// One Nesterov-Adam update from the gradients accumulated in `bound`.
/// A non-finite gradient aborts before any state changes, naming the
/// offending parameter.
void nadam_step(ParamStore& store, const BoundParams& bound, NadamState& state,
                double lr, const NadamConfig& config = {});

struct TrainHistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double trusted_fraction = 0.0;
};

using EpochCallback = std::function<void(const TrainHistoryRow&)>;

struct TrainResult {
  PdsNet model;
  std::vector<TrainHistoryRow> history;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
};

/// Full optimization loop: shuffled mini-batches, the conditional
/// objective, Nadam steps, per-epoch validation, and early stopping on
/// validation MAE with the configured patience. The returned model carries
/// the best-validation parameters. With an empty validation split the loop
/// runs all epochs and keeps the final parameters.
TrainResult train(std::span<const QoSRecord> train_records,
                  std::span<const QoSRecord> val_records,
                  const PdsNetConfig& model_config, const TrainConfig& config,
                  const EpochCallback& callback = {});

/// CSV with header epoch,train_loss,val_mae,val_rmse,trusted_fraction.
void save_history_csv(const std::string& path,
                      std::span<const TrainHistoryRow> rows);

}  // namespace pdsnet

#endif  // PDSNET_TRAINING_HPP_
