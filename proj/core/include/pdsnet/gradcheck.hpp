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

#ifndef PDSNET_GRADCHECK_HPP_
#define PDSNET_GRADCHECK_HPP_

#include <functional>
#include <span>
#include <vector>

#include "pdsnet/tensor.hpp"

namespace pdsnet::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

/// Compares reverse-mode gradients of a scalar-valued build function against
/// central finite differences at the given point. The relative error of each
/// coordinate is normalized by the largest gradient magnitude seen for that
/// input, so flat regions do not divide by zero.
GradCheckResult gradcheck_many(
    const std::function<Tensor(Graph&, std::span<const Tensor>)>& build,
    std::span<const Shape> shapes,
    std::span<const std::vector<double>> points, double eps = 1e-5);

/// Single-input convenience wrapper; returns the max relative error.
double gradcheck(const std::function<Tensor(Graph&, Tensor)>& build,
                 const Shape& shape, std::span<const double> point,
                 double eps = 1e-5);

}  // namespace pdsnet::ad

#endif  // PDSNET_GRADCHECK_HPP_
