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
#include <cstdint>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "pdsnet/distributions.hpp"
#include "pdsnet/gradcheck.hpp"
#include "pdsnet/rng.hpp"
#include "pdsnet/tensor.hpp"

using pdsnet::DiagGaussian;
using pdsnet::from_heads;
using pdsnet::kl;
using pdsnet::kl_per_record;
using pdsnet::log_prob;
using pdsnet::make_diag_gaussian;
using pdsnet::RngStream;
using pdsnet::sample;
using pdsnet::sample_with_eps;
using pdsnet::ad::gradcheck_many;
using pdsnet::ad::Graph;
using pdsnet::ad::Shape;
using pdsnet::ad::ShapeError;
using pdsnet::ad::Tensor;

namespace {

// Scalar-arithmetic log density, independent of the graph ops under test.
double ref_log_density(std::span<const double> mu, std::span<const double> sigma,
                       std::span<const double> z) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = z[i] - mu[i];
    total += -std::log(sigma[i]) - 0.5 * std::log(2.0 * std::numbers::pi) -
             d * d / (2.0 * sigma[i] * sigma[i]);
  }
  return total;
}

struct McEstimate {
  double mean;
  double se;
};

// Monte-Carlo divergence estimate: draws z from the posterior and averages
// the log-density gap against the prior. Pure double arithmetic.
McEstimate mc_kl(std::span<const double> mu_r, std::span<const double> sig_r,
                 std::span<const double> mu_i, std::span<const double> sig_i,
                 std::size_t n_samples, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> z(mu_r.size());
  double acc = 0.0;
  double acc_sq = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = mu_r[i] + sig_r[i] * rng.normal();
    }
    const double gap =
        ref_log_density(mu_r, sig_r, z) - ref_log_density(mu_i, sig_i, z);
    acc += gap;
    acc_sq += gap * gap;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = acc / n;
  const double var = (acc_sq / n - mean * mean) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_SUITE_BEGIN("distributions");

TEST_CASE("from_heads on zeros gives zero mean and softplus-zero spread") {
  Graph g;
  Tensor e = g.zeros({2, 4});
  DiagGaussian d = from_heads(g, e);
  CHECK(d.latent_dim == 2);
  CHECK(d.mu.shape() == Shape{2, 2});
  CHECK(d.sigma.shape() == Shape{2, 2});
  for (double v : d.mu.value()) CHECK(v == 0.0);
  for (double v : d.sigma.value()) {
    CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("from_heads rejects an odd last dim") {
  Graph g;
  Tensor e = g.zeros({2, 5});
  CHECK_THROWS_AS(from_heads(g, e), ShapeError);
}

TEST_CASE("gradients flow through both halves of from_heads") {
  const Shape shapes[] = {{2, 6}};
  RngStream rng(101);
  const std::vector<double> points[] = {rng.normals(12)};
  auto build = [](Graph& g, std::span<const Tensor> in) {
    DiagGaussian d = from_heads(g, in[0]);
    return g.mean(g.add(g.square(d.mu), g.square(d.sigma)));
  };
  CHECK(gradcheck_many(build, shapes, points).max_rel_error < 1e-5);
}

TEST_CASE("sampling a nearly point-mass spread returns the mean") {
  Graph g;
  Tensor mu = g.input({3}, {1.0, -2.0, 0.25});
  Tensor sigma = g.input({3}, {1e-12, 1e-12, 1e-12});
  DiagGaussian d = make_diag_gaussian(mu, sigma);
  RngStream rng(5);
  Tensor z = sample(g, d, rng);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::fabs(z.value()[i] - mu.value()[i]) < 1e-9);
  }
}

TEST_CASE("empirical sample mean concentrates on mu") {
  const std::size_t batch = 100000;
  Graph g;
  std::vector<double> mu_data(batch * 2);
  std::vector<double> sigma_data(batch * 2);
  for (std::size_t b = 0; b < batch; ++b) {
    mu_data[2 * b] = 1.0;
    mu_data[2 * b + 1] = -2.0;
    sigma_data[2 * b] = 0.5;
    sigma_data[2 * b + 1] = 2.0;
  }
  DiagGaussian d = make_diag_gaussian(g.input({batch, 2}, std::move(mu_data)),
                                      g.input({batch, 2}, std::move(sigma_data)));
  RngStream rng(777);
  Tensor z = sample(g, d, rng);
  double col0 = 0.0;
  double col1 = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    col0 += z.value()[2 * b];
    col1 += z.value()[2 * b + 1];
  }
  col0 /= static_cast<double>(batch);
  col1 /= static_cast<double>(batch);
  const double root_n = std::sqrt(static_cast<double>(batch));
  CHECK(std::fabs(col0 - 1.0) < 4.0 * 0.5 / root_n);
  CHECK(std::fabs(col1 + 2.0) < 4.0 * 2.0 / root_n);
}

TEST_CASE("a fixed seed reproduces the identical draw") {
  auto draw = [](std::uint64_t seed) {
    Graph g;
    DiagGaussian d = make_diag_gaussian(g.input({2, 2}, {0.0, 1.0, -1.0, 2.0}),
                                        g.input({2, 2}, {1.0, 0.5, 2.0, 0.1}));
    RngStream rng(seed);
    Tensor z = sample(g, d, rng);
    return std::vector<double>(z.value().begin(), z.value().end());
  };
  const auto a = draw(99);
  const auto b = draw(99);
  const auto c = draw(100);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("divergence of a distribution against itself is zero") {
  RngStream rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g;
    std::vector<double> mu = rng.normals(6);
    std::vector<double> sigma(6);
    for (double& s : sigma) s = 0.2 + std::fabs(rng.normal());
    DiagGaussian d = make_diag_gaussian(g.input({2, 3}, mu),
                                        g.input({2, 3}, sigma));
    CHECK(std::fabs(kl(g, d, d).scalar()) < 1e-10);
  }
}

TEST_CASE("unit-spread means one apart diverge by one half") {
  Graph g;
  DiagGaussian post = make_diag_gaussian(g.input({1}, {1.0}), g.input({1}, {1.0}));
  DiagGaussian prior = make_diag_gaussian(g.input({1}, {0.0}), g.input({1}, {1.0}));
  CHECK(kl(g, post, prior).scalar() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("divergence is nonnegative and zero only at equality") {
  RngStream rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    Graph g;
    std::vector<double> mu_a = rng.normals(4);
    std::vector<double> mu_b = rng.normals(4);
    std::vector<double> sig_a(4);
    std::vector<double> sig_b(4);
    for (double& s : sig_a) s = 0.3 + std::fabs(rng.normal());
    for (double& s : sig_b) s = 0.3 + std::fabs(rng.normal());
    DiagGaussian a = make_diag_gaussian(g.input({4}, mu_a), g.input({4}, sig_a));
    DiagGaussian b = make_diag_gaussian(g.input({4}, mu_b), g.input({4}, sig_b));
    CHECK(kl(g, a, b).scalar() > 0.0);
  }
}

TEST_CASE("closed form matches the Monte-Carlo estimate") {
  RngStream param_rng(828);
  const std::size_t n_samples = 100000;
  for (int pair = 0; pair < 50; ++pair) {
    std::vector<double> mu_r(3), mu_i(3), sig_r(3), sig_i(3);
    for (std::size_t i = 0; i < 3; ++i) {
      mu_r[i] = param_rng.uniform(-2.0, 2.0);
      mu_i[i] = param_rng.uniform(-2.0, 2.0);
      sig_r[i] = param_rng.uniform(0.3, 2.0);
      sig_i[i] = param_rng.uniform(0.3, 2.0);
    }
    Graph g;
    DiagGaussian post = make_diag_gaussian(g.input({3}, mu_r), g.input({3}, sig_r));
    DiagGaussian prior = make_diag_gaussian(g.input({3}, mu_i), g.input({3}, sig_i));
    const double closed = kl(g, post, prior).scalar();
    const McEstimate est =
        mc_kl(mu_r, sig_r, mu_i, sig_i, n_samples,
              pdsnet::derive_seed(828, "mc", static_cast<std::uint64_t>(pair)));
    CHECK(std::fabs(closed - est.mean) < 3.0 * est.se);
  }
}

TEST_CASE("per-record divergence averages to the scalar form") {
  Graph g;
  DiagGaussian post = make_diag_gaussian(g.input({2, 2}, {0.0, 1.0, 2.0, -1.0}),
                                         g.input({2, 2}, {1.0, 0.5, 0.7, 1.3}));
  DiagGaussian prior = make_diag_gaussian(g.input({2, 2}, {0.5, 0.5, 0.5, 0.5}),
                                          g.input({2, 2}, {1.0, 1.0, 1.0, 1.0}));
  Tensor per = kl_per_record(g, post, prior);
  CHECK(per.shape() == Shape{2});
  const double mean = 0.5 * (per.value()[0] + per.value()[1]);
  CHECK(kl(g, post, prior).scalar() == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("standard normal log density at the origin") {
  Graph g;
  DiagGaussian d = make_diag_gaussian(g.input({1}, {0.0}), g.input({1}, {1.0}));
  Tensor lp = log_prob(g, d, g.input({1}, {0.0}));
  CHECK(lp.value()[0] ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("log density peaks at the mean with zero slope") {
  Graph g;
  Tensor mu = g.input({3}, {0.5, -1.0, 2.0});
  DiagGaussian d = make_diag_gaussian(mu, g.input({3}, {0.8, 1.2, 0.4}));
  Tensor at_mu = log_prob(g, d, g.input({3}, {0.5, -1.0, 2.0}));
  Tensor off = log_prob(g, d, g.input({3}, {0.6, -1.0, 2.0}));
  CHECK(at_mu.value()[0] > off.value()[0]);
  g.backward(g.sum(at_mu));
  for (double gv : mu.grad()) CHECK(gv == 0.0);
}

TEST_CASE("log density agrees with the scalar reference") {
  RngStream rng(515);
  const std::vector<double> mu = rng.normals(4);
  std::vector<double> sigma(4);
  for (double& s : sigma) s = 0.3 + std::fabs(rng.normal());
  const std::vector<double> z = rng.normals(4);
  Graph g;
  DiagGaussian d = make_diag_gaussian(g.input({4}, mu), g.input({4}, sigma));
  Tensor lp = log_prob(g, d, g.input({4}, z));
  CHECK(lp.value()[0] ==
        doctest::Approx(ref_log_density(mu, sigma, z)).epsilon(1e-12));
}

TEST_CASE("frozen-noise sampling has the reparameterized gradients") {
  RngStream rng(616);
  const std::vector<double> eps = rng.normals(6);
  {
    Graph g;
    Tensor mu = g.input({2, 3}, rng.normals(6));
    std::vector<double> sig(6);
    for (double& s : sig) s = 0.5 + std::fabs(rng.normal());
    Tensor sigma = g.input({2, 3}, sig);
    DiagGaussian d = make_diag_gaussian(mu, sigma);
    Tensor z = sample_with_eps(g, d, eps);
    g.backward(g.mean(z));
    double mu_grad_total = 0.0;
    for (double v : mu.grad()) mu_grad_total += v;
    CHECK(mu_grad_total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(sigma.grad()[i] == doctest::Approx(eps[i] / 6.0).epsilon(1e-12));
    }
  }

  const Shape shapes[] = {{2, 3}, {2, 3}};
  RngStream point_rng(617);
  std::vector<double> sig_point(6);
  for (double& s : sig_point) s = 0.5 + std::fabs(point_rng.normal());
  const std::vector<double> points[] = {point_rng.normals(6), sig_point};
  auto build = [&eps](Graph& g, std::span<const Tensor> in) {
    DiagGaussian d = make_diag_gaussian(in[0], in[1]);
    return g.mean(sample_with_eps(g, d, eps));
  };
  CHECK(gradcheck_many(build, shapes, points).max_rel_error < 1e-6);
}

TEST_CASE("sigma must be strictly positive") {
  Graph g;
  Tensor mu = g.input({2}, {0.0, 0.0});
  Tensor bad = g.input({2}, {1.0, 0.0});
  CHECK_THROWS_AS(make_diag_gaussian(mu, bad), std::invalid_argument);
}

TEST_SUITE_END();
