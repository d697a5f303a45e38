// Copyright 2026 The privmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVMECH_TENSOR_HPP
#define PRIVMECH_TENSOR_HPP

#include <functional>
#include <memory>
#include <vector>

#include "privmech/common.hpp"

namespace privmech::ad {

// Reverse-mode automatic differentiation over dense row-major 2-D tensors.
//
// A Tensor is a shared handle to a graph node. Operations on tracked tensors
// (parameters, or anything derived from them) record the computation; calling
// backward() on a scalar result accumulates d(result)/d(leaf) into each
// tracked leaf's grad buffer. Values are treated as immutable once an op has
// consumed them; parameters are mutated only between passes (by the
// optimizer or checkpoint loading).

namespace detail {

struct Node {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major, size rows*cols
  std::vector<double> grad;    // lazily allocated, same size as values
  bool requires_grad = false;  // true only for leaves (parameters)
  bool tracked = false;        // participates in backprop
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // adds into parents' grad buffers

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols);
  static Tensor full(int rows, int cols, double value);
  static Tensor constant(int rows, int cols, std::vector<double> values);
  static Tensor scalar(double value) { return full(1, 1, value); }
  // Leaf with requires_grad set; the only kind of node the optimizer touches.
  static Tensor parameter(int rows, int cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  int size() const { return node_->rows * node_->cols; }
  bool tracked() const { return node_ && node_->tracked; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  const std::vector<double>& values() const { return node_->values; }
  // For optimizer updates and checkpoint restore only.
  std::vector<double>& mutable_values() { return node_->values; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const std::vector<double>& grad() const { return node_->grad; }
  void zero_grad() {
    if (node_ && !node_->grad.empty())
      node_->grad.assign(node_->values.size(), 0.0);
  }

  // Value of a 1x1 tensor.
  double item() const;
  double at(int r, int c) const { return node_->values[r * node_->cols + c]; }

  // Untracked copy of the values (cuts the tape).
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op(int rows, int cols, std::vector<Tensor> inputs,
                        std::function<void(detail::Node&)> backprop);
};

// Accumulates d(loss)/d(leaf) into every tracked leaf reachable from loss.
// Repeated calls without zero_grad() accumulate. Throws ContractError if
// loss is not scalar.
void backward(const Tensor& loss);

// --- Forward ops -----------------------------------------------------------
// Binary elementwise ops accept equal shapes or a 1x1 tensor on either side
// (scalar broadcast). Shape violations throw DimensionError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
// a (n x d) plus a row vector (1 x d) added to every row.
Tensor add_rowvec(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_op(const Tensor& a);
// Natural log; throws DomainError on nonpositive entries (clamp first).
Tensor log_op(const Tensor& a);
Tensor clamp_min(const Tensor& a, double floor);
Tensor clamp(const Tensor& a, double lo, double hi);
// Row-wise softmax; rows sum to 1.
Tensor softmax(const Tensor& a);
Tensor square(const Tensor& a);
Tensor max_with_zero(const Tensor& a);

Tensor sum(const Tensor& a);   // scalar
Tensor mean(const Tensor& a);  // scalar
Tensor row_sum(const Tensor& a);  // n x 1

Tensor concat(const std::vector<Tensor>& parts);  // along columns
Tensor slice_cols(const Tensor& a, int col_begin, int col_end);
Tensor transpose(const Tensor& a);

// Per-row product of a packed lower-triangular (dim x dim) matrix with a
// vector: rows of `tri` hold dim*(dim+1)/2 packed entries, rows of `vec`
// hold dim entries. Returns n x dim. Used for covariance-factor sampling.
Tensor tril_matvec(const Tensor& tri, const Tensor& vec, int dim);

// Packed index of lower-triangular entry (i, j), j <= i.
inline int tril_index(int i, int j) { return i * (i + 1) / 2 + j; }

}  // namespace privmech::ad

#endif  // PRIVMECH_TENSOR_HPP
