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

#include "pdsnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace pdsnet::ad {

namespace {

// Rank-1 tensors act as a single row wherever a [B x D] operand is accepted.
struct RowsCols {
  std::size_t rows;
  std::size_t cols;
};

RowsCols rows_cols(const Shape& shape) {
  if (shape.size() == 1) return {1, shape[0]};
  return {shape[0], shape[1]};
}

void require_rank_le2(const char* op, const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw ShapeError(std::string(op) + ": rank-1 or rank-2 operand required, got " +
                     shape_str(shape));
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  if (name == "softplus") return Activation::kSoftplus;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
    case Activation::kSoftplus: return "softplus";
  }
  return "unknown";
}

const Shape& Tensor::shape() const { return graph_->node(id_).shape; }

std::size_t Tensor::size() const { return graph_->node(id_).value.size(); }

std::span<const double> Tensor::value() const {
  const auto& n = graph_->node(id_);
  return {n.value.data(), n.value.size()};
}

std::span<const double> Tensor::grad() const {
  const auto& n = graph_->node(id_);
  return {n.grad.data(), n.grad.size()};
}

double Tensor::scalar() const {
  const auto& n = graph_->node(id_);
  if (n.value.size() != 1) {
    throw ShapeError("scalar: tensor has shape " + shape_str(n.shape));
  }
  return n.value[0];
}

Tensor Graph::make_node(Shape shape, std::vector<double> values) {
  const std::size_t want = shape_size(shape);
  if (values.size() != want) {
    throw ShapeError("input: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Graph::check_same_graph(Tensor t) const {
  if (!t.valid() || t.graph() != this) {
    throw std::logic_error("tensor does not belong to this graph");
  }
}

Tensor Graph::input(Shape shape, std::vector<double> values) {
  return make_node(std::move(shape), std::move(values));
}

Tensor Graph::input(Shape shape, std::span<const double> values) {
  return make_node(std::move(shape),
                   std::vector<double>(values.begin(), values.end()));
}

Tensor Graph::zeros(Shape shape) {
  std::vector<double> v(shape_size(shape), 0.0);
  return make_node(std::move(shape), std::move(v));
}

Tensor Graph::scalar_input(double value) { return make_node({1}, {value}); }

Tensor Graph::elementwise_binary(const char* name, Tensor a, Tensor b,
                                 double (*fwd)(double, double),
                                 void (*bwd)(double, double, double, double&,
                                             double&)) {
  check_same_graph(a);
  check_same_graph(b);
  if (node(a.id()).shape != node(b.id()).shape) {
    throw ShapeError(std::string(name) + ": shapes " +
                     shape_str(node(a.id()).shape) + " and " +
                     shape_str(node(b.id()).shape) + " do not match");
  }
  const auto& av = node(a.id()).value;
  const auto& bv = node(b.id()).value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  Tensor y = make_node(node(a.id()).shape, std::move(out));
  const std::size_t ai = a.id(), bi = b.id(), yi = y.id();
  tape_.push_back({name, [this, ai, bi, yi, bwd] {
                     auto& an = node(ai);
                     auto& bn = node(bi);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       bwd(an.value[i], bn.value[i], yn.grad[i], an.grad[i],
                           bn.grad[i]);
                     }
                   }});
  return y;
}

Tensor Graph::add(Tensor a, Tensor b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& ga, double& gb) {
        ga += g;
        gb += g;
      });
}

Tensor Graph::sub(Tensor a, Tensor b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& ga, double& gb) {
        ga += g;
        gb -= g;
      });
}

Tensor Graph::mul(Tensor a, Tensor b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& ga, double& gb) {
        ga += g * y;
        gb += g * x;
      });
}

Tensor Graph::div(Tensor a, Tensor b) {
  return elementwise_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double x, double y, double g, double& ga, double& gb) {
        ga += g / y;
        gb -= g * x / (y * y);
      });
}

Tensor Graph::scale(Tensor a, double factor) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] * factor;
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"scale", [this, ai, yi, factor] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       an2.grad[i] += factor * yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::add_scalar(Tensor a, double shift) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] + shift;
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"add_scalar", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       an2.grad[i] += yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::square(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] * an.value[i];
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"square", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       an2.grad[i] += 2.0 * an2.value[i] * yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::abs(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(an.value[i]);
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"abs", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       const double x = an2.value[i];
                       const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                       an2.grad[i] += s * yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::log(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(an.value[i]);
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"log", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       an2.grad[i] += yn.grad[i] / an2.value[i];
                     }
                   }});
  return y;
}

Tensor Graph::relu(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = an.value[i] > 0.0 ? an.value[i] : 0.0;
  }
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"relu", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       if (an2.value[i] > 0.0) an2.grad[i] += yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::softplus(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_softplus(an.value[i]);
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"softplus", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       an2.grad[i] += sigmoid(an2.value[i]) * yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::huber(Tensor a, double transition) {
  check_same_graph(a);
  if (!(transition > 0.0)) {
    throw std::invalid_argument("huber: transition must be positive");
  }
  const auto& an = node(a.id());
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = std::fabs(an.value[i]);
    out[i] = x <= transition ? 0.5 * x * x : transition * (x - 0.5 * transition);
  }
  Tensor y = make_node(an.shape, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"huber", [this, ai, yi, transition] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < yn.grad.size(); ++i) {
                       const double x = an2.value[i];
                       const double d =
                           std::fabs(x) <= transition
                               ? x
                               : (x > 0.0 ? transition : -transition);
                       an2.grad[i] += d * yn.grad[i];
                     }
                   }});
  return y;
}

Tensor Graph::detach(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  Tensor y = make_node(an.shape, an.value);
  tape_.push_back({"detach", [] {}});
  return y;
}

Tensor Graph::matmul(Tensor a, Tensor b) {
  check_same_graph(a);
  check_same_graph(b);
  const auto& an = node(a.id());
  const auto& bn = node(b.id());
  require_rank_le2("matmul", an.shape);
  if (bn.shape.size() != 2) {
    throw ShapeError("matmul: right operand must be rank-2, got " +
                     shape_str(bn.shape));
  }
  const auto [m, k] = rows_cols(an.shape);
  const std::size_t k2 = bn.shape[0];
  const std::size_t n = bn.shape[1];
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions of " + shape_str(an.shape) +
                     " and " + shape_str(bn.shape) + " do not match");
  }
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = an.value[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out[i * n + j] += av * bn.value[p * n + j];
      }
    }
  }
  Shape out_shape = an.shape.size() == 1 ? Shape{n} : Shape{m, n};
  Tensor y = make_node(std::move(out_shape), std::move(out));
  const std::size_t ai = a.id(), bi = b.id(), yi = y.id();
  tape_.push_back({"matmul", [this, ai, bi, yi, m, k, n] {
                     auto& an2 = node(ai);
                     auto& bn2 = node(bi);
                     const auto& yn = node(yi);
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         const double g = yn.grad[i * n + j];
                         if (g == 0.0) continue;
                         for (std::size_t p = 0; p < k; ++p) {
                           an2.grad[i * k + p] += g * bn2.value[p * n + j];
                           bn2.grad[p * n + j] += g * an2.value[i * k + p];
                         }
                       }
                     }
                   }});
  return y;
}

Tensor Graph::add_rowwise(Tensor x, Tensor bias) {
  check_same_graph(x);
  check_same_graph(bias);
  const auto& xn = node(x.id());
  const auto& bn = node(bias.id());
  require_rank_le2("add_rowwise", xn.shape);
  if (bn.shape.size() != 1) {
    throw ShapeError("add_rowwise: bias must be rank-1, got " +
                     shape_str(bn.shape));
  }
  const auto [rows, cols] = rows_cols(xn.shape);
  if (bn.shape[0] != cols) {
    throw ShapeError("add_rowwise: shapes " + shape_str(xn.shape) + " and " +
                     shape_str(bn.shape) + " do not match");
  }
  std::vector<double> out(xn.value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = xn.value[r * cols + c] + bn.value[c];
    }
  }
  Tensor y = make_node(xn.shape, std::move(out));
  const std::size_t xi = x.id(), bi = bias.id(), yi = y.id();
  tape_.push_back({"add_rowwise", [this, xi, bi, yi, rows, cols] {
                     auto& xn2 = node(xi);
                     auto& bn2 = node(bi);
                     const auto& yn = node(yi);
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t c = 0; c < cols; ++c) {
                         const double g = yn.grad[r * cols + c];
                         xn2.grad[r * cols + c] += g;
                         bn2.grad[c] += g;
                       }
                     }
                   }});
  return y;
}

Tensor Graph::dense(Tensor x, Tensor w, Tensor b, Activation act) {
  Tensor pre = add_rowwise(matmul(x, w), b);
  switch (act) {
    case Activation::kRelu: return relu(pre);
    case Activation::kLinear: return pre;
    case Activation::kSoftplus: return softplus(pre);
  }
  return pre;
}

Tensor Graph::embed(Tensor table, std::size_t row) {
  check_same_graph(table);
  const auto& tn = node(table.id());
  if (tn.shape.size() != 2) {
    throw ShapeError("embed: table must be rank-2, got " + shape_str(tn.shape));
  }
  const std::size_t v = tn.shape[0];
  const std::size_t d = tn.shape[1];
  if (row >= v) {
    throw LookupError("embed: row " + std::to_string(row) +
                      " out of range for table with " + std::to_string(v) +
                      " rows");
  }
  std::vector<double> out(tn.value.begin() + static_cast<std::ptrdiff_t>(row * d),
                          tn.value.begin() + static_cast<std::ptrdiff_t>((row + 1) * d));
  Tensor y = make_node({d}, std::move(out));
  const std::size_t ti = table.id(), yi = y.id();
  tape_.push_back({"embed", [this, ti, yi, row, d] {
                     auto& tn2 = node(ti);
                     const auto& yn = node(yi);
                     for (std::size_t j = 0; j < d; ++j) {
                       tn2.grad[row * d + j] += yn.grad[j];
                     }
                   }});
  return y;
}

Tensor Graph::embed(Tensor table, std::span<const std::uint32_t> rows) {
  check_same_graph(table);
  const auto& tn = node(table.id());
  if (tn.shape.size() != 2) {
    throw ShapeError("embed: table must be rank-2, got " + shape_str(tn.shape));
  }
  const std::size_t v = tn.shape[0];
  const std::size_t d = tn.shape[1];
  for (std::uint32_t r : rows) {
    if (r >= v) {
      throw LookupError("embed: row " + std::to_string(r) +
                        " out of range for table with " + std::to_string(v) +
                        " rows");
    }
  }
  const std::size_t batch = rows.size();
  std::vector<double> out(batch * d);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t off = static_cast<std::size_t>(rows[b]) * d;
    std::copy_n(tn.value.begin() + static_cast<std::ptrdiff_t>(off), d,
                out.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  Tensor y = make_node({batch, d}, std::move(out));
  std::vector<std::uint32_t> rows_copy(rows.begin(), rows.end());
  const std::size_t ti = table.id(), yi = y.id();
  tape_.push_back(
      {"embed", [this, ti, yi, d, rows_copy = std::move(rows_copy)] {
         auto& tn2 = node(ti);
         const auto& yn = node(yi);
         for (std::size_t b = 0; b < rows_copy.size(); ++b) {
           const std::size_t off = static_cast<std::size_t>(rows_copy[b]) * d;
           for (std::size_t j = 0; j < d; ++j) {
             tn2.grad[off + j] += yn.grad[b * d + j];
           }
         }
       }});
  return y;
}

Tensor Graph::concat(std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return concat(std::span<const Tensor>(v.data(), v.size()));
}

Tensor Graph::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  for (Tensor t : parts) check_same_graph(t);
  const std::size_t rank = node(parts[0].id()).shape.size();
  require_rank_le2("concat", node(parts[0].id()).shape);
  std::size_t rows = rows_cols(node(parts[0].id()).shape).rows;
  std::size_t total_cols = 0;
  for (Tensor t : parts) {
    const auto& s = node(t.id()).shape;
    if (s.size() != rank || rows_cols(s).rows != rows) {
      throw ShapeError("concat: shapes " +
                       shape_str(node(parts[0].id()).shape) + " and " +
                       shape_str(s) + " do not agree off the last axis");
    }
    total_cols += rows_cols(s).cols;
  }
  std::vector<double> out(rows * total_cols);
  std::size_t col_off = 0;
  for (Tensor t : parts) {
    const auto& pn = node(t.id());
    const std::size_t cols = rows_cols(pn.shape).cols;
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pn.value.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                  out.begin() + static_cast<std::ptrdiff_t>(r * total_cols + col_off));
    }
    col_off += cols;
  }
  Shape out_shape = rank == 1 ? Shape{total_cols} : Shape{rows, total_cols};
  Tensor y = make_node(std::move(out_shape), std::move(out));
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (Tensor t : parts) {
    ids.push_back(t.id());
    widths.push_back(rows_cols(node(t.id()).shape).cols);
  }
  const std::size_t yi = y.id();
  tape_.push_back({"concat", [this, yi, rows, total_cols, ids = std::move(ids),
                              widths = std::move(widths)] {
                     const auto& yn = node(yi);
                     std::size_t off = 0;
                     for (std::size_t p = 0; p < ids.size(); ++p) {
                       auto& pn = node(ids[p]);
                       const std::size_t cols = widths[p];
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < cols; ++c) {
                           pn.grad[r * cols + c] +=
                               yn.grad[r * total_cols + off + c];
                         }
                       }
                       off += cols;
                     }
                   }});
  return y;
}

Tensor Graph::slice_cols(Tensor a, std::size_t begin, std::size_t end) {
  check_same_graph(a);
  const auto& an = node(a.id());
  require_rank_le2("slice_cols", an.shape);
  const auto [rows, cols] = rows_cols(an.shape);
  if (begin > end || end > cols) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " +
                     shape_str(an.shape));
  }
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(an.value.begin() + static_cast<std::ptrdiff_t>(r * cols + begin),
                width, out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  Shape out_shape = an.shape.size() == 1 ? Shape{width} : Shape{rows, width};
  Tensor y = make_node(std::move(out_shape), std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"slice_cols", [this, ai, yi, rows, cols, begin, width] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t c = 0; c < width; ++c) {
                         an2.grad[r * cols + begin + c] +=
                             yn.grad[r * width + c];
                       }
                     }
                   }});
  return y;
}

Tensor Graph::sum(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  double total = 0.0;
  for (double v : an.value) total += v;
  Tensor y = make_node({1}, {total});
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"sum", [this, ai, yi] {
                     auto& an2 = node(ai);
                     const double g = node(yi).grad[0];
                     for (double& gv : an2.grad) gv += g;
                   }});
  return y;
}

Tensor Graph::mean(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  if (an.value.empty()) throw ShapeError("mean: empty tensor");
  double total = 0.0;
  for (double v : an.value) total += v;
  const double inv = 1.0 / static_cast<double>(an.value.size());
  Tensor y = make_node({1}, {total * inv});
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"mean", [this, ai, yi, inv] {
                     auto& an2 = node(ai);
                     const double g = node(yi).grad[0] * inv;
                     for (double& gv : an2.grad) gv += g;
                   }});
  return y;
}

Tensor Graph::row_sum(Tensor a) {
  check_same_graph(a);
  const auto& an = node(a.id());
  require_rank_le2("row_sum", an.shape);
  const auto [rows, cols] = rows_cols(an.shape);
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += an.value[r * cols + c];
  }
  Tensor y = make_node({rows}, std::move(out));
  const std::size_t ai = a.id(), yi = y.id();
  tape_.push_back({"row_sum", [this, ai, yi, rows, cols] {
                     auto& an2 = node(ai);
                     const auto& yn = node(yi);
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t c = 0; c < cols; ++c) {
                         an2.grad[r * cols + c] += yn.grad[r];
                       }
                     }
                   }});
  return y;
}

void Graph::backward(Tensor loss) {
  check_same_graph(loss);
  if (backward_ran_) {
    throw std::logic_error("backward: already ran on this graph");
  }
  const auto& ln = node(loss.id());
  if (ln.value.size() != 1) {
    throw ShapeError("backward: loss must be a single element, got " +
                     shape_str(ln.shape));
  }
  backward_ran_ = true;
  node(loss.id()).grad[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    it->backward();
  }
}

}  // namespace pdsnet::ad
