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

#ifndef PDSNET_DATAIO_HPP_
#define PDSNET_DATAIO_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pdsnet {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumFeatures = 6;

enum class Feature : std::size_t {
  kUserCountry = 0,
  kUserAs = 1,
  kUserCity = 2,
  kServiceCountry = 3,
  kServiceAs = 4,
  kServiceCity = 5,
};

std::string_view feature_name(Feature f);

/// Shortest round-trippable decimal rendering, used by every CSV writer.
std::string format_double(double value);

/// One observed user-service response time. Categorical fields are stored as
/// per-feature vocabulary ids; id 0 is the MISSING token.
struct QoSRecord {
  std::uint32_t user_id = 0;
  std::uint32_t service_id = 0;
  double rt = 0.0;
  std::array<std::uint32_t, kNumFeatures> features{};

  bool operator==(const QoSRecord&) const = default;
};

/// Dense string-to-id map for one categorical feature. Id 0 is reserved for
/// the MISSING token (the empty string); real values get ids 1, 2, ... in
/// first-insertion order, so rebuilding from the same stream is stable.
class Vocabulary {
 public:
  static constexpr std::uint32_t kMissingId = 0;

  Vocabulary();

  /// Returns the id, inserting the value if new. Empty maps to kMissingId.
  std::uint32_t add(std::string_view value);
  /// Id of a known value; DataError if absent.
  std::uint32_t id_of(std::string_view value) const;
  bool contains(std::string_view value) const;
  const std::string& value_of(std::uint32_t id) const;
  /// Count including the MISSING slot; max id + 1.
  std::size_t size() const { return values_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> values_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct VocabularySet {
  std::array<Vocabulary, kNumFeatures> by_feature;

  Vocabulary& operator[](Feature f) {
    return by_feature[static_cast<std::size_t>(f)];
  }
  const Vocabulary& operator[](Feature f) const {
    return by_feature[static_cast<std::size_t>(f)];
  }
};

struct Dataset {
  std::vector<QoSRecord> records;
  VocabularySet vocabs;
  std::size_t n_users = 0;
  std::size_t n_services = 0;
};

/// Loads the raw matrix layout: a whitespace-separated float grid plus two
/// tab-separated metadata files with a header row. Metadata columns are found
/// by name (ID / Country / AS / City, brackets and case ignored); a missing
/// column leaves that feature MISSING everywhere, as does a literal "null" or
/// empty cell. Matrix entries <= 0 are unobserved and skipped.
Dataset load_wsdream(const std::string& rt_matrix_path,
                     const std::string& user_meta_path,
                     const std::string& service_meta_path);

/// Canonical record CSV with header
/// user_id,service_id,rt,user_country,user_as,user_city,service_country,service_as,service_city
/// and MISSING encoded as an empty field. Round-trips exactly.
void save_records_csv(const std::string& path, const Dataset& dataset);
Dataset load_records_csv(const std::string& path);

struct SplitSpec {
  double density = 0.05;
  double train_frac = 0.05;
  double test_frac = 0.75;
  double validation_frac = 0.20;
  std::uint64_t seed = 0;

  /// Table-style split: train = density, validation fixed at 20%, test the
  /// remainder.
  static SplitSpec from_density(double density, std::uint64_t seed);
  void validate() const;
};

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> validation;
};

/// Disjoint, exhaustive, uniform-random partition of record indices;
/// deterministic per seed, sizes match the fractions within one record.
SplitResult split_by_density(std::span<const QoSRecord> records,
                             const SplitSpec& spec);

void save_split_manifest(const std::string& path, const SplitSpec& spec,
                         const SplitResult& split);
struct SplitManifest {
  SplitSpec spec;
  SplitResult split;
};
SplitManifest load_split_manifest(const std::string& path);

std::vector<QoSRecord> take_records(std::span<const QoSRecord> records,
                                    std::span<const std::size_t> indices);

struct NoiseResult {
  Dataset dataset;
  std::vector<std::uint32_t> corrupted_users;
};

/// Gives a random ceil(fraction * n_users) subset of users fake city and AS
/// ids: per user one replacement value per feature, drawn uniformly from the
/// real values that user never had. Labels are untouched.
NoiseResult inject_feature_noise(const Dataset& dataset, double user_fraction,
                                 std::uint64_t seed);

/// Drops records whose response time the isolation forest flags: the forest
/// is fit on the scalar rt values and a record is removed when its score
/// (anomaly-positive, centered so typical points sit near zero) exceeds the
/// threshold.
Dataset filter_outliers_iforest(const Dataset& dataset,
                                double score_threshold = 0.1,
                                std::size_t trees = 100,
                                std::size_t subsample = 256,
                                std::uint64_t seed = 0);

/// Everything needed to score predictions against the generating process.
struct SynthTruth {
  std::size_t latent_dim = 0;
  std::vector<double> user_latent;
  std::vector<double> service_latent;
  std::array<std::vector<double>, kNumFeatures> feature_effects;
  double bias = 0.0;
  double noise_log_mean = 0.0;
  double noise_log_sd = 0.0;
  std::vector<std::uint32_t> corrupted_users;
  std::vector<std::uint32_t> missing_services;
  std::array<std::vector<std::uint32_t>, kNumFeatures> true_assignments;

  /// Noise-free response time from the true latents and true features.
  double clean_rt(std::uint32_t user, std::uint32_t service) const;
  /// Mean of the additive observation noise.
  double noise_mean() const;
};

struct SynthResult {
  Dataset dataset;
  SynthTruth truth;
};

/// Full-grid synthetic corpus: rt = softplus(u.v + per-feature group effects
/// + bias) + lognormal noise. A fraction of users get corrupted city/AS
/// features and a fraction of services get all features MISSING; the returned
/// truth keeps the uncorrupted assignments.
SynthResult synth_generate(std::size_t n_users, std::size_t n_services,
                           std::size_t latent_dim, double noise_user_fraction,
                           double missing_fraction, std::uint64_t seed);

}  // namespace pdsnet

#endif  // PDSNET_DATAIO_HPP_
