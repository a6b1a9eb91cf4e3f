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

#include "pdsnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pdsnet/distributions.hpp"
#include "pdsnet/metrics.hpp"
#include "pdsnet/rng.hpp"

namespace pdsnet {

LossKind loss_kind_from_string(std::string_view s) {
  if (s == "mae") return LossKind::kMae;
  if (s == "mse") return LossKind::kMse;
  if (s == "huber") return LossKind::kHuber;
  throw std::invalid_argument("unknown loss kind: " + std::string(s));
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kMae:
      return "mae";
    case LossKind::kMse:
      return "mse";
    case LossKind::kHuber:
      return "huber";
  }
  throw std::invalid_argument("bad loss kind value");
}

void TrainConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  for (double l : lambdas)
    if (l < 0.0) throw std::invalid_argument("lambdas must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (huber_transition <= 0.0)
    throw std::invalid_argument("huber_transition must be > 0");
  if (untrusted_task_weight < 0.0)
    throw std::invalid_argument("untrusted_task_weight must be >= 0");
}

namespace {

ad::Tensor elementwise_error(ad::Graph& g, const ad::Tensor& y,
                             const ad::Tensor& yhat, LossKind kind,
                             double huber_transition) {
  ad::Tensor diff = g.sub(y, yhat);
  switch (kind) {
    case LossKind::kMae:
      return g.abs(diff);
    case LossKind::kMse:
      return g.square(diff);
    case LossKind::kHuber:
      return g.huber(diff, huber_transition);
  }
  throw std::invalid_argument("bad loss kind value");
}

}  // namespace

ad::Tensor task_loss(ad::Graph& g, const ad::Tensor& y, const ad::Tensor& yhat,
                     LossKind kind, double huber_transition) {
  return g.mean(elementwise_error(g, y, yhat, kind, huber_transition));
}

ad::Tensor task_loss_per_record(ad::Graph& g, const ad::Tensor& y,
                                const ad::Tensor& yhat, LossKind kind,
                                double huber_transition) {
  return g.row_sum(elementwise_error(g, y, yhat, kind, huber_transition));
}

std::array<std::optional<ad::Tensor>, 3> alignment_per_record(
    ad::Graph& g, const ForwardTrace& trace, Ablation ablation,
    bool stop_posterior_grad) {
  std::array<std::optional<ad::Tensor>, 3> out;
  if (ablation == Ablation::kNoDeepSup) return out;
  if (!trace.posterior.has_value())
    throw std::invalid_argument("alignment needs the posterior branch");
  DiagGaussian post = *trace.posterior;
  if (stop_posterior_grad) {
    post = make_diag_gaussian(g.detach(post.mu), g.detach(post.sigma));
  }
  for (std::size_t level = 0; level < 3; ++level) {
    if (!trace.priors[level].has_value()) continue;
    const DiagGaussian& prior = *trace.priors[level];
    if (ablation == Ablation::kNoProb) {
      out[level] = g.row_sum(g.square(g.sub(post.mu, prior.mu)));
    } else {
      out[level] = kl_per_record(g, post, prior);
    }
  }
  return out;
}

HLossResult h_loss(ad::Graph& g, const ForwardTrace& trace,
                   std::span<const double> y, const TrainConfig& config,
                   Ablation ablation) {
  config.validate();
  const std::size_t b = y.size();
  if (b == 0) throw std::invalid_argument("empty batch");
  if (trace.y1.size() != b)
    throw std::invalid_argument("label count does not match the trace");

  HLossResult result;
  auto y1_values = trace.y1.value();
  result.trusted_mask.assign(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (std::abs(y[i] - y1_values[i]) < config.delta) {
      result.trusted_mask[i] = 1.0;
      ++result.trusted;
    }
  }
  result.untrusted = b - result.trusted;

  ad::Tensor labels = g.input({b, 1}, y);
  result.task1_per_record = task_loss_per_record(g, labels, trace.y1,
                                                 config.loss_kind,
                                                 config.huber_transition);

  if (ablation == Ablation::kNoDeepSup) {
    result.loss = g.mean(result.task1_per_record);
    return result;
  }

  if (!trace.y2.valid())
    throw std::invalid_argument("conditional loss needs both branches");
  result.task2_per_record = task_loss_per_record(g, labels, trace.y2,
                                                 config.loss_kind,
                                                 config.huber_transition);
  result.align_per_record =
      alignment_per_record(g, trace, ablation, config.stop_posterior_grad);

  ad::Tensor task_both =
      g.add(result.task1_per_record, result.task2_per_record);

  std::vector<double> untrusted_mask(b, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    untrusted_mask[i] = 1.0 - result.trusted_mask[i];
  ad::Tensor mask_t = g.input({b}, result.trusted_mask);
  ad::Tensor mask_u = g.input({b}, untrusted_mask);

  ad::Tensor total = g.sum(g.mul(mask_t, task_both));
  ad::Tensor untrusted_part;
  for (std::size_t level = 0; level < 3; ++level) {
    if (!result.align_per_record[level].has_value()) continue;
    if (config.lambdas[level] == 0.0) continue;
    ad::Tensor term =
        g.scale(*result.align_per_record[level], config.lambdas[level]);
    untrusted_part =
        untrusted_part.valid() ? g.add(untrusted_part, term) : term;
  }
  if (config.untrusted_task_weight > 0.0) {
    ad::Tensor weighted =
        g.scale(task_both, config.untrusted_task_weight);
    untrusted_part =
        untrusted_part.valid() ? g.add(untrusted_part, weighted) : weighted;
  }
  if (untrusted_part.valid()) {
    total = g.add(total, g.sum(g.mul(mask_u, untrusted_part)));
  }
  result.loss = g.scale(total, 1.0 / static_cast<double>(b));
  return result;
}

NadamState::NadamState(const ParamStore& store) {
  m_.reserve(store.size());
  v_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::size_t count = store.values(i).size();
    m_.emplace_back(count, 0.0);
    v_.emplace_back(count, 0.0);
  }
}

void nadam_step(ParamStore& store, const BoundParams& bound, NadamState& state,
                double lr, const NadamConfig& config) {
  if (bound.leaves.size() != store.size())
    throw std::invalid_argument("bound parameters do not match the store");
  if (state.m_.size() != store.size())
    throw std::invalid_argument("optimizer state does not match the store");
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (double gv : bound.leaves[i].grad()) {
      if (!std::isfinite(gv))
        throw DivergenceError("non-finite gradient in parameter " +
                              store.spec(i).name);
    }
  }
  const std::size_t t = ++state.step_;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::vector<double>& theta = store.values(i);
    std::vector<double>& m = state.m_[i];
    std::vector<double>& v = state.v_[i];
    auto grad = bound.leaves[i].grad();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = grad[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      const double lookahead =
          config.beta1 * m_hat + (1.0 - config.beta1) * gj / bias1;
      theta[j] -= lr * lookahead / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

namespace {

struct EpochStats {
  double loss_sum = 0.0;
  std::size_t trusted = 0;
  std::size_t count = 0;
};

}  // namespace

TrainResult train(std::span<const QoSRecord> train_records,
                  std::span<const QoSRecord> val_records,
                  const PdsNetConfig& model_config, const TrainConfig& config,
                  const EpochCallback& callback) {
  config.validate();
  model_config.validate();
  if (train_records.empty())
    throw std::invalid_argument("training needs at least one record");

  TrainResult result{PdsNet(model_config), {}, 0,
                     std::numeric_limits<double>::infinity()};
  PdsNet& model = result.model;
  model.init_params(derive_seed(config.seed, "init"));
  NadamState opt(model.store());
  const Ablation ablation = model_config.ablation;

  std::vector<std::vector<double>> best_values;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> val_truth;
  val_truth.reserve(val_records.size());
  for (const QoSRecord& r : val_records) val_truth.push_back(r.rt);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream shuffle_rng(derive_seed(config.seed, "shuffle", epoch));
    shuffle_rng.shuffle(order);
    EpochStats stats;
    const std::size_t batches =
        (order.size() + config.batch_size - 1) / config.batch_size;
    for (std::size_t batch = 0; batch < batches; ++batch) {
      const std::size_t begin = batch * config.batch_size;
      const std::size_t end =
          std::min(begin + config.batch_size, order.size());
      std::vector<QoSRecord> records;
      records.reserve(end - begin);
      std::vector<double> y;
      y.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        records.push_back(train_records[order[i]]);
        y.push_back(records.back().rt);
      }
      ad::Graph g;
      BoundParams bound = model.bind(g);
      RngStream draw_rng(derive_seed(config.seed, "draw", epoch, batch));
      HLossResult hl;
      // Shapes and config are validated before the loop, so an
      // invalid_argument raised inside a step (a scale head underflowing to
      // zero, say) can only mean the parameters have blown up.
      try {
        ForwardTrace trace =
            ablation == Ablation::kNoDeepSup
                ? model.predict_main(g, bound, records, draw_rng,
                                     RunMode::kTrain)
                : model.predict_posterior(g, bound, records, y, draw_rng,
                                          RunMode::kTrain);
        hl = h_loss(g, trace, y, config, ablation);
      } catch (const ad::ShapeError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw DivergenceError(std::string("degenerate forward pass (") +
                              e.what() + ") at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batch));
      }
      const double loss_value = hl.loss.scalar();
      if (!std::isfinite(loss_value))
        throw DivergenceError("non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batch));
      g.backward(hl.loss);
      try {
        nadam_step(model.store(), bound, opt, config.lr);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batch));
      }
      stats.loss_sum += loss_value * static_cast<double>(end - begin);
      stats.trusted += hl.trusted;
      stats.count += end - begin;
    }

    TrainHistoryRow row;
    row.epoch = epoch;
    row.train_loss = stats.loss_sum / static_cast<double>(stats.count);
    row.trusted_fraction =
        static_cast<double>(stats.trusted) / static_cast<double>(stats.count);
    if (!val_records.empty()) {
      RngStream val_rng(derive_seed(config.seed, "val-draw", epoch));
      std::vector<double> predictions =
          model.predict(val_records, val_rng, config.eval_use_mean);
      row.val_mae = mae(val_truth, predictions);
      row.val_rmse = rmse(val_truth, predictions);
    } else {
      row.val_mae = std::numeric_limits<double>::quiet_NaN();
      row.val_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(row);
    if (callback) callback(row);

    if (!val_records.empty()) {
      if (row.val_mae < result.best_val_mae) {
        result.best_val_mae = row.val_mae;
        result.best_epoch = epoch;
        best_values.clear();
        for (std::size_t i = 0; i < model.store().size(); ++i)
          best_values.push_back(model.store().values(i));
        since_best = 0;
      } else {
        ++since_best;
        if (since_best >= config.patience) break;
      }
    }
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < model.store().size(); ++i)
      model.store().values(i) = best_values[i];
  } else if (!result.history.empty()) {
    result.best_epoch = result.history.back().epoch;
    result.best_val_mae = result.history.back().val_mae;
  }
  return result;
}

void save_history_csv(const std::string& path,
                      std::span<const TrainHistoryRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open history file: " + path);
  out << "epoch,train_loss,val_mae,val_rmse,trusted_fraction\n";
  for (const TrainHistoryRow& row : rows) {
    out << row.epoch << ',' << format_double(row.train_loss) << ','
        << format_double(row.val_mae) << ',' << format_double(row.val_rmse)
        << ',' << format_double(row.trusted_fraction) << '\n';
  }
  if (!out) throw std::runtime_error("history write failed: " + path);
}

}  // namespace pdsnet
