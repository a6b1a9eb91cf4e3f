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

#ifndef PDSNET_MODEL_HPP_
#define PDSNET_MODEL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdsnet/dataio.hpp"
#include "pdsnet/distributions.hpp"
#include "pdsnet/rng.hpp"
#include "pdsnet/tensor.hpp"

namespace pdsnet {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training variants. kNoProb replaces latent sampling with the
/// deterministic mean projection; kNoDeepSup keeps sampling but drops the
/// posterior branch and the level 2/3 priors.
enum class Ablation { kFull, kNoProb, kNoDeepSup };

Ablation ablation_from_string(std::string_view s);
std::string_view to_string(Ablation a);

enum class RunMode { kTrain, kEval };

/// The six embedding tables, in the order their lookups are concatenated.
enum class EmbedTable : std::size_t {
  kUserId = 0,
  kServiceId = 1,
  kUserAs = 2,
  kServiceAs = 3,
  kUserCity = 4,
  kServiceCity = 5,
};
inline constexpr std::size_t kNumEmbedTables = 6;

std::string_view embed_table_name(EmbedTable t);

struct PdsNetConfig {
  std::size_t latent_dim = 64;
  std::size_t embed_exp = 10;
  std::array<std::size_t, kNumEmbedTables> vocab_sizes = {1, 1, 1, 1, 1, 1};
  std::size_t prior_hidden = 512;
  std::size_t posterior_hidden = 512;
  std::array<std::size_t, 3> head_widths = {1024, 512, 256};
  Ablation ablation = Ablation::kFull;

  std::size_t embed_dim() const { return std::size_t{1} << embed_exp; }
  std::size_t fused_dim() const { return kNumEmbedTables * embed_dim(); }

  void validate() const;
};

/// Copies table row counts out of a loaded corpus: user and service id
/// tables plus the four categorical vocabularies.
void set_vocab_sizes(PdsNetConfig& config, const Dataset& dataset);

struct ParamSpec {
  std::string name;
  ad::Shape shape;
};

/// Named parameter layout for a configuration, in storage order.
std::vector<ParamSpec> param_layout(const PdsNetConfig& config);

/// Total scalar count across the layout.
std::size_t param_count(const PdsNetConfig& config);

/// Owns the parameter values; the graph binds them to leaves per pass.
class ParamStore {
 public:
  explicit ParamStore(std::vector<ParamSpec> layout);

  std::size_t size() const { return entries_.size(); }
  std::size_t total_values() const { return total_; }
  const ParamSpec& spec(std::size_t i) const { return entries_[i].spec; }
  std::vector<double>& values(std::size_t i) { return entries_[i].value; }
  const std::vector<double>& values(std::size_t i) const {
    return entries_[i].value;
  }
  std::size_t index_of(std::string_view name) const;

 private:
  struct Entry {
    ParamSpec spec;
    std::vector<double> value;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t total_ = 0;
};

/// Graph leaves for every parameter, aligned with ParamStore order.
struct BoundParams {
  std::vector<ad::Tensor> leaves;
};

/// One full pass. Optional pieces are populated according to the ablation
/// and, for the posterior branch, only in training mode.
struct ForwardTrace {
  ad::Tensor c;
  std::array<std::optional<DiagGaussian>, 3> priors;
  std::optional<DiagGaussian> posterior;
  ad::Tensor z1;
  ad::Tensor zr;
  ad::Tensor x1, x2, x3;
  ad::Tensor y1;
  ad::Tensor y2;
};

class PdsNet {
 public:
  explicit PdsNet(PdsNetConfig config);

  const PdsNetConfig& config() const { return config_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  /// Seeded weight reset: embeddings uniform in ±0.05, dense weights
  /// truncated normal with std 0.05, biases zero.
  void init_params(std::uint64_t seed);

  BoundParams bind(ad::Graph& g) const;

  ad::Tensor embed_concat(ad::Graph& g, const BoundParams& p,
                          std::span<const QoSRecord> batch) const;

  /// level is 1-based; the input must be C, x1, or x2 respectively.
  DiagGaussian prior_forward(ad::Graph& g, const BoundParams& p,
                             const ad::Tensor& h, int level) const;

  DiagGaussian posterior_forward(ad::Graph& g, const BoundParams& p,
                                 const ad::Tensor& y) const;

  /// Main branch. Training mode samples the level-1 latent; evaluation
  /// also samples unless eval_use_mean substitutes the mean.
  ForwardTrace predict_main(ad::Graph& g, const BoundParams& p,
                            std::span<const QoSRecord> batch, RngStream& rng,
                            RunMode mode, bool eval_use_mean = false) const;

  /// Both branches; the label-conditioned branch exists only in training,
  /// so RunMode::kEval throws std::logic_error.
  ForwardTrace predict_posterior(ad::Graph& g, const BoundParams& p,
                                 std::span<const QoSRecord> batch,
                                 std::span<const double> y, RngStream& rng,
                                 RunMode mode) const;

  /// Convenience evaluation of the main prediction, batched internally.
  std::vector<double> predict(std::span<const QoSRecord> batch, RngStream& rng,
                              bool eval_use_mean = false) const;

 private:
  struct HeadOut {
    ad::Tensor x1, x2, x3, y;
  };
  HeadOut head_forward(ad::Graph& g, const BoundParams& p,
                       const ad::Tensor& fused) const;
  ad::Tensor leaf(const BoundParams& p, std::string_view name) const;

  PdsNetConfig config_;
  ParamStore store_;
};

/// Versioned checkpoint: text manifest plus raw little-endian doubles.
void save_params(const PdsNet& model, const std::string& path);
PdsNet load_params(const std::string& path);
/// Validates the stored latent_dim, embed_exp, and vocab sizes against
/// `expect`; mismatch throws CheckpointError naming the field.
PdsNet load_params(const std::string& path, const PdsNetConfig& expect);

}  // namespace pdsnet

#endif  // PDSNET_MODEL_HPP_
