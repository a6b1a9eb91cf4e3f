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

#ifndef PDSNET_DISTRIBUTIONS_HPP_
#define PDSNET_DISTRIBUTIONS_HPP_

#include <span>

#include "pdsnet/rng.hpp"
#include "pdsnet/tensor.hpp"

namespace pdsnet {

/// Diagonal multivariate Gaussian over a [B x N] latent block. mu and sigma
/// share one shape; every sigma entry is strictly positive.
struct DiagGaussian {
  ad::Tensor mu;
  ad::Tensor sigma;
  std::size_t latent_dim = 0;
};

/// Validates shapes and sigma positivity.
DiagGaussian make_diag_gaussian(ad::Tensor mu, ad::Tensor sigma);

/// Splits a [B x 2N] head output into mu (first N columns, linear) and sigma
/// (last N columns through softplus). Differentiable in both halves.
DiagGaussian from_heads(ad::Graph& g, ad::Tensor e);

/// Reparameterized draw z = mu + sigma * eps with eps ~ N(0, I); gradients
/// flow into mu and sigma, never into eps.
ad::Tensor sample(ad::Graph& g, const DiagGaussian& d, RngStream& rng);

/// Same draw with caller-supplied noise, for replay and gradient checks.
ad::Tensor sample_with_eps(ad::Graph& g, const DiagGaussian& d,
                           std::span<const double> eps);

/// Closed-form KL(post || prior) per record, summed over the latent axis.
ad::Tensor kl_per_record(ad::Graph& g, const DiagGaussian& post,
                         const DiagGaussian& prior);

/// Batch mean of kl_per_record, as a scalar.
ad::Tensor kl(ad::Graph& g, const DiagGaussian& post, const DiagGaussian& prior);

/// Per-record log density of z under d, summed over the latent axis.
ad::Tensor log_prob(ad::Graph& g, const DiagGaussian& d, ad::Tensor z);

}  // namespace pdsnet

#endif  // PDSNET_DISTRIBUTIONS_HPP_
