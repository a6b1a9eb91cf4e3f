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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pdsnet/dataio.hpp"
#include "pdsnet/rng.hpp"

namespace pdsnet {

namespace {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Group cardinalities and effect spreads per feature. City carries the most
// signal so that corrupting it visibly hurts feature-driven prediction.
struct FeaturePlan {
  std::size_t cardinality;
  double effect_sd;
  const char* prefix;
};

constexpr std::array<FeaturePlan, kNumFeatures> kPlans = {{
    {4, 0.2, "u-country-"},
    {6, 0.4, "u-as-"},
    {8, 0.5, "u-city-"},
    {4, 0.2, "s-country-"},
    {6, 0.4, "s-as-"},
    {8, 0.5, "s-city-"},
}};

std::size_t robust_ceil(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

double SynthTruth::clean_rt(std::uint32_t user, std::uint32_t service) const {
  double pre = bias;
  for (std::size_t d = 0; d < latent_dim; ++d) {
    pre += user_latent[user * latent_dim + d] *
           service_latent[service * latent_dim + d];
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const bool user_side = f < 3;
    const std::uint32_t owner = user_side ? user : service;
    pre += feature_effects[f][true_assignments[f][owner]];
  }
  return softplus(pre);
}

double SynthTruth::noise_mean() const {
  return std::exp(noise_log_mean + 0.5 * noise_log_sd * noise_log_sd);
}

SynthResult synth_generate(std::size_t n_users, std::size_t n_services,
                           std::size_t latent_dim, double noise_user_fraction,
                           double missing_fraction, std::uint64_t seed) {
  if (n_users == 0 || n_services == 0 || latent_dim == 0) {
    throw std::invalid_argument("synth_generate: sizes must be positive");
  }
  if (noise_user_fraction < 0.0 || noise_user_fraction > 1.0 ||
      missing_fraction < 0.0 || missing_fraction > 1.0) {
    throw std::invalid_argument("synth_generate: fractions must be in [0, 1]");
  }

  SynthResult result;
  SynthTruth& truth = result.truth;
  Dataset& ds = result.dataset;
  ds.n_users = n_users;
  ds.n_services = n_services;
  truth.latent_dim = latent_dim;
  truth.bias = 0.5;
  truth.noise_log_mean = std::log(0.05);
  truth.noise_log_sd = 0.6;

  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    auto& vocab = ds.vocabs[static_cast<Feature>(f)];
    for (std::size_t v = 0; v < kPlans[f].cardinality; ++v) {
      vocab.add(kPlans[f].prefix + std::to_string(v));
    }
  }

  RngStream rng(derive_seed(seed, "synth"));
  const double latent_scale =
      std::pow(0.3 * 0.3 / static_cast<double>(latent_dim), 0.25);
  truth.user_latent = rng.normals(n_users * latent_dim);
  for (double& v : truth.user_latent) v *= latent_scale;
  truth.service_latent = rng.normals(n_services * latent_dim);
  for (double& v : truth.service_latent) v *= latent_scale;

  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    auto& effects = truth.feature_effects[f];
    effects.assign(kPlans[f].cardinality + 1, 0.0);
    for (std::size_t v = 1; v < effects.size(); ++v) {
      effects[v] = kPlans[f].effect_sd * rng.normal();
    }
  }

  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const bool user_side = f < 3;
    const std::size_t owners = user_side ? n_users : n_services;
    auto& assign = truth.true_assignments[f];
    assign.resize(owners);
    for (std::size_t o = 0; o < owners; ++o) {
      assign[o] =
          1 + static_cast<std::uint32_t>(rng.uniform_int(kPlans[f].cardinality));
    }
  }

  // Corrupted users keep their labels but present fake city/AS ids.
  std::vector<std::uint32_t> users(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    users[u] = static_cast<std::uint32_t>(u);
  }
  RngStream corrupt_rng(derive_seed(seed, "synth-noise-users"));
  corrupt_rng.shuffle(users);
  const std::size_t n_corrupt =
      noise_user_fraction > 0.0
          ? robust_ceil(noise_user_fraction * static_cast<double>(n_users))
          : 0;
  truth.corrupted_users.assign(users.begin(),
                               users.begin() + static_cast<std::ptrdiff_t>(n_corrupt));
  std::sort(truth.corrupted_users.begin(), truth.corrupted_users.end());

  std::array<std::vector<std::uint32_t>, kNumFeatures> observed_assignments =
      truth.true_assignments;
  for (std::uint32_t u : truth.corrupted_users) {
    RngStream fake_rng(derive_seed(seed, "synth-noise-values", u));
    for (Feature f : {Feature::kUserCity, Feature::kUserAs}) {
      const std::size_t fi = static_cast<std::size_t>(f);
      const std::size_t pool = kPlans[fi].cardinality;
      std::uint32_t fake;
      do {
        fake = 1 + static_cast<std::uint32_t>(fake_rng.uniform_int(pool));
      } while (fake == truth.true_assignments[fi][u]);
      observed_assignments[fi][u] = fake;
    }
  }

  std::vector<std::uint32_t> services(n_services);
  for (std::size_t s = 0; s < n_services; ++s) {
    services[s] = static_cast<std::uint32_t>(s);
  }
  RngStream missing_rng(derive_seed(seed, "synth-missing"));
  missing_rng.shuffle(services);
  const std::size_t n_missing =
      missing_fraction > 0.0
          ? robust_ceil(missing_fraction * static_cast<double>(n_services))
          : 0;
  truth.missing_services.assign(services.begin(),
                                services.begin() + static_cast<std::ptrdiff_t>(n_missing));
  std::sort(truth.missing_services.begin(), truth.missing_services.end());
  std::vector<bool> service_missing(n_services, false);
  for (std::uint32_t s : truth.missing_services) service_missing[s] = true;

  RngStream noise_rng(derive_seed(seed, "synth-observation"));
  ds.records.reserve(n_users * n_services);
  for (std::size_t i = 0; i < n_users; ++i) {
    for (std::size_t j = 0; j < n_services; ++j) {
      QoSRecord rec;
      rec.user_id = static_cast<std::uint32_t>(i);
      rec.service_id = static_cast<std::uint32_t>(j);
      const double noise = std::exp(
          noise_rng.normal(truth.noise_log_mean, truth.noise_log_sd));
      rec.rt = truth.clean_rt(rec.user_id, rec.service_id) + noise;
      for (std::size_t f = 0; f < 3; ++f) {
        rec.features[f] = observed_assignments[f][i];
      }
      for (std::size_t f = 3; f < kNumFeatures; ++f) {
        rec.features[f] =
            service_missing[j] ? Vocabulary::kMissingId
                               : observed_assignments[f][j];
      }
      ds.records.push_back(rec);
    }
  }
  return result;
}

}  // namespace pdsnet
