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

#include "pdsnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdsnet::ad {

namespace {

double eval_at(const std::function<Tensor(Graph&, std::span<const Tensor>)>& build,
               std::span<const Shape> shapes,
               std::span<const std::vector<double>> points) {
  Graph g;
  std::vector<Tensor> leaves;
  leaves.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    leaves.push_back(g.input(shapes[i], points[i]));
  }
  return build(g, leaves).scalar();
}

}  // namespace

GradCheckResult gradcheck_many(
    const std::function<Tensor(Graph&, std::span<const Tensor>)>& build,
    std::span<const Shape> shapes,
    std::span<const std::vector<double>> points, double eps) {
  if (shapes.size() != points.size()) {
    throw std::invalid_argument("gradcheck: shapes and points differ in count");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shape_size(shapes[i]) != points[i].size()) {
      throw std::invalid_argument("gradcheck: point " + std::to_string(i) +
                                  " does not match shape " +
                                  shape_str(shapes[i]));
    }
  }

  std::vector<std::vector<double>> analytic(shapes.size());
  {
    Graph g;
    std::vector<Tensor> leaves;
    leaves.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      leaves.push_back(g.input(shapes[i], points[i]));
    }
    Tensor loss = build(g, leaves);
    g.backward(loss);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      auto gr = leaves[i].grad();
      analytic[i].assign(gr.begin(), gr.end());
    }
  }

  GradCheckResult result;
  std::vector<std::vector<double>> work(points.begin(), points.end());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    double scale = 1e-8;
    for (double v : analytic[i]) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("gradcheck: non-finite analytic gradient");
      }
      scale = std::max(scale, std::fabs(v));
    }

    std::vector<double> fd(work[i].size());
    for (std::size_t j = 0; j < work[i].size(); ++j) {
      const double saved = work[i][j];
      work[i][j] = saved + eps;
      const double hi = eval_at(build, shapes, work);
      work[i][j] = saved - eps;
      const double lo = eval_at(build, shapes, work);
      work[i][j] = saved;
      fd[j] = (hi - lo) / (2.0 * eps);
      if (!std::isfinite(fd[j])) {
        throw std::runtime_error("gradcheck: non-finite finite-difference value");
      }
      scale = std::max(scale, std::fabs(fd[j]));
    }

    for (std::size_t j = 0; j < fd.size(); ++j) {
      const double rel = std::fabs(analytic[i][j] - fd[j]) / scale;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_input = i;
        result.worst_index = j;
      }
    }
  }
  return result;
}

double gradcheck(const std::function<Tensor(Graph&, Tensor)>& build,
                 const Shape& shape, std::span<const double> point,
                 double eps) {
  const Shape shapes[] = {shape};
  const std::vector<double> points[] = {
      std::vector<double>(point.begin(), point.end())};
  auto wrapped = [&build](Graph& g, std::span<const Tensor> leaves) {
    return build(g, leaves[0]);
  };
  return gradcheck_many(wrapped, shapes, points, eps).max_rel_error;
}

}  // namespace pdsnet::ad

