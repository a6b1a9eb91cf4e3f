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

#include "pdsnet/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pdsnet {

using ad::ShapeError;
using ad::Tensor;

namespace {

std::size_t last_dim(const Tensor& t) {
  const auto& s = t.shape();
  return s.back();
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + ad::shape_str(a.shape()) +
                     " and " + ad::shape_str(b.shape()) + " do not match");
  }
}

}  // namespace

DiagGaussian make_diag_gaussian(Tensor mu, Tensor sigma) {
  check_same_shape("make_diag_gaussian", mu, sigma);
  for (double s : sigma.value()) {
    if (!(s > 0.0)) {
      throw std::invalid_argument(
          "make_diag_gaussian: sigma must be strictly positive");
    }
  }
  return DiagGaussian{mu, sigma, last_dim(mu)};
}

DiagGaussian from_heads(ad::Graph& g, Tensor e) {
  const std::size_t width = last_dim(e);
  if (width % 2 != 0) {
    throw ShapeError("from_heads: last dim of " + ad::shape_str(e.shape()) +
                     " is odd");
  }
  const std::size_t n = width / 2;
  Tensor mu = g.slice_cols(e, 0, n);
  Tensor sigma = g.softplus(g.slice_cols(e, n, width));
  return DiagGaussian{mu, sigma, n};
}

Tensor sample(ad::Graph& g, const DiagGaussian& d, RngStream& rng) {
  std::vector<double> eps = rng.normals(d.mu.size());
  return sample_with_eps(g, d, eps);
}

Tensor sample_with_eps(ad::Graph& g, const DiagGaussian& d,
                       std::span<const double> eps) {
  if (eps.size() != d.mu.size()) {
    throw ShapeError("sample: noise has " + std::to_string(eps.size()) +
                     " values for shape " + ad::shape_str(d.mu.shape()));
  }
  Tensor eps_t = g.input(d.mu.shape(), eps);
  return g.add(d.mu, g.mul(d.sigma, eps_t));
}

Tensor kl_per_record(ad::Graph& g, const DiagGaussian& post,
                     const DiagGaussian& prior) {
  check_same_shape("kl", post.mu, prior.mu);
  Tensor log_ratio = g.sub(g.log(prior.sigma), g.log(post.sigma));
  Tensor numerator =
      g.add(g.square(post.sigma), g.square(g.sub(post.mu, prior.mu)));
  Tensor denominator = g.scale(g.square(prior.sigma), 2.0);
  Tensor per_coord = g.add_scalar(
      g.add(log_ratio, g.div(numerator, denominator)), -0.5);
  return g.row_sum(per_coord);
}

Tensor kl(ad::Graph& g, const DiagGaussian& post, const DiagGaussian& prior) {
  return g.mean(kl_per_record(g, post, prior));
}

Tensor log_prob(ad::Graph& g, const DiagGaussian& d, Tensor z) {
  check_same_shape("log_prob", d.mu, z);
  constexpr double kHalfLogTwoPi = 0.9189385332046727;
  Tensor centered = g.sub(z, d.mu);
  Tensor quad = g.div(g.square(centered), g.scale(g.square(d.sigma), 2.0));
  Tensor per_coord = g.add_scalar(
      g.sub(g.scale(g.log(d.sigma), -1.0), quad), -kHalfLogTwoPi);
  return g.row_sum(per_coord);
}

}  // namespace pdsnet
