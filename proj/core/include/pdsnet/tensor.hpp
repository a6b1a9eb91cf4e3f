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

#ifndef PDSNET_TENSOR_HPP_
#define PDSNET_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdsnet::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thrown when operand shapes are incompatible; the message names both shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown by embedding lookups with an index outside the table.
struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

enum class Activation { kRelu, kLinear, kSoftplus };

/// Parses "relu" | "linear" | "softplus"; anything else is a ShapeError-free
/// std::invalid_argument naming the offending tag.
Activation activation_from_string(std::string_view name);
std::string_view to_string(Activation act);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; values and gradients live in
/// the graph. A default-constructed Tensor is empty and must not be used in
/// ops.
class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const;
  std::size_t size() const;
  std::span<const double> value() const;
  std::span<const double> grad() const;

  /// Value of a single-element tensor.
  double scalar() const;

  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }

 private:
  friend class Graph;
  Tensor(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Every op appends one record; backward()
/// replays the records once, in reverse, accumulating gradients into every
/// node. Graphs are single-writer: record a batch, run backward, discard.
///
/// Tensors are row-major fp64. Rank-1 tensors are treated as a single row
/// where a [B x D] operand is expected.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // -- leaves -------------------------------------------------------------

  Tensor input(Shape shape, std::vector<double> values);
  Tensor input(Shape shape, std::span<const double> values);
  Tensor zeros(Shape shape);
  Tensor scalar_input(double value);

  // -- elementwise --------------------------------------------------------

  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor div(Tensor a, Tensor b);
  Tensor scale(Tensor a, double factor);
  Tensor add_scalar(Tensor a, double shift);
  Tensor square(Tensor a);
  Tensor abs(Tensor a);
  Tensor log(Tensor a);
  Tensor relu(Tensor a);
  Tensor softplus(Tensor a);
  /// Elementwise Huber: x^2/2 inside the transition band, linear outside.
  Tensor huber(Tensor a, double transition);
  /// Identity forward, no gradient flow backward.
  Tensor detach(Tensor a);

  // -- layers -------------------------------------------------------------

  Tensor matmul(Tensor a, Tensor b);
  /// Adds a rank-1 bias to every row of x.
  Tensor add_rowwise(Tensor x, Tensor bias);
  /// activation(x . w + b); x is [B x I] or [I], w is [I x O], b is [O].
  Tensor dense(Tensor x, Tensor w, Tensor b, Activation act);
  /// Row lookup; backward scatters into the selected row only.
  Tensor embed(Tensor table, std::size_t row);
  /// Batched lookup producing [B x D].
  Tensor embed(Tensor table, std::span<const std::uint32_t> rows);

  // -- structure ----------------------------------------------------------

  /// Concatenation along the last axis. Parts must agree on all other dims.
  Tensor concat(std::span<const Tensor> parts);
  Tensor concat(std::initializer_list<Tensor> parts);
  /// Columns [begin, end) of a; for rank-1 input, the element range.
  Tensor slice_cols(Tensor a, std::size_t begin, std::size_t end);

  // -- reductions ---------------------------------------------------------

  Tensor sum(Tensor a);
  Tensor mean(Tensor a);
  /// [B x D] -> [B]; rank-1 input reduces to a scalar-shaped [1].
  Tensor row_sum(Tensor a);

  // -- backward -----------------------------------------------------------

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse, once.
  /// loss must be a single-element tensor; a second call is a logic error.
  void backward(Tensor loss);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t op_count() const { return tape_.size(); }
  bool backward_ran() const { return backward_ran_; }

 private:
  friend class Tensor;

  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
  };

  struct OpRecord {
    const char* name;
    std::function<void()> backward;
  };

  Tensor make_node(Shape shape, std::vector<double> values);
  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  void check_same_graph(Tensor t) const;
  Tensor elementwise_binary(const char* name, Tensor a, Tensor b,
                            double (*fwd)(double, double),
                            void (*bwd)(double a, double b, double g,
                                        double& ga, double& gb));

  std::vector<Node> nodes_;
  std::vector<OpRecord> tape_;
  bool backward_ran_ = false;
};

}  // namespace pdsnet::ad

#endif  // PDSNET_TENSOR_HPP_
