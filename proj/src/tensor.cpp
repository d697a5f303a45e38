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

#include "privmech/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace privmech::ad {

namespace {

using detail::Node;

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic,
                                                   Eigen::RowMajor>>;

ConstMatMap as_mat(const std::vector<double>& v, int rows, int cols) {
  return ConstMatMap(v.data(), rows, cols);
}

MatMap as_mat(std::vector<double>& v, int rows, int cols) {
  return MatMap(v.data(), rows, cols);
}

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

bool is_scalar(const Tensor& t) { return t.rows() == 1 && t.cols() == 1; }

}  // namespace

Tensor make_op(int rows, int cols, std::vector<Tensor> inputs,
               std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->values.resize(static_cast<std::size_t>(rows) * cols);
  for (const Tensor& t : inputs) {
    if (t.tracked()) n->tracked = true;
  }
  if (n->tracked) {
    for (const Tensor& t : inputs) n->parents.push_back(t.shared_node());
    n->backprop = std::move(backprop);
  }
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(int rows, int cols) { return full(rows, cols, 0.0); }

Tensor Tensor::full(int rows, int cols, double value) {
  auto n = std::make_shared<detail::Node>();
  n->rows = rows;
  n->cols = cols;
  n->values.assign(static_cast<std::size_t>(rows) * cols, value);
  return Tensor(std::move(n));
}

Tensor Tensor::constant(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) {
    throw DimensionError("Tensor::constant: " + std::to_string(values.size()) +
                         " values for " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  auto n = std::make_shared<detail::Node>();
  n->rows = rows;
  n->cols = cols;
  n->values = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(int rows, int cols, std::vector<double> values) {
  Tensor t = constant(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  t.node_->tracked = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("Tensor::item: tensor is not scalar, shape " +
                        std::to_string(rows()) + "x" + std::to_string(cols()));
  }
  return node_->values[0];
}

Tensor Tensor::detach() const {
  return Tensor::constant(rows(), cols(), node_->values);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar tensor");
  }
  if (!loss.tracked()) return;  // nothing reachable

  // Post-order DFS over tracked ancestors.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->tracked && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are scratch space for this pass; leaf grads accumulate
  // across passes.
  for (Node* n : order) {
    if (n->requires_grad) {
      n->ensure_grad();
    } else {
      n->grad.assign(n->values.size(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// --- Binary elementwise with scalar broadcast --------------------------------

namespace {

// f(a, b) elementwise with 1x1 broadcast on either side; dfa/dfb give the
// local partials as functions of (a_val, b_val).
template <typename F, typename DA, typename DB>
Tensor elementwise_binary(const char* name, const Tensor& a, const Tensor& b,
                          F f, DA dfa, DB dfb) {
  const bool bs = is_scalar(b) && !is_scalar(a);
  const bool as = is_scalar(a) && !is_scalar(b);
  if (!as && !bs) check_same_shape(name, a, b);
  const Tensor& big = as ? b : a;

  Tensor out = make_op(
      big.rows(), big.cols(), {a, b}, [a, b, as, bs, dfa, dfb](Node& self) {
        Node* na = a.node();
        Node* nb = b.node();
        const std::size_t n = self.values.size();
        if (na->tracked) {
          na->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double av = na->values[as ? 0 : i];
            const double bv = nb->values[bs ? 0 : i];
            na->grad[as ? 0 : i] += self.grad[i] * dfa(av, bv);
          }
        }
        if (nb->tracked) {
          nb->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double av = na->values[as ? 0 : i];
            const double bv = nb->values[bs ? 0 : i];
            nb->grad[bs ? 0 : i] += self.grad[i] * dfb(av, bv);
          }
        }
      });

  const std::size_t n = out.values().size();
  auto& ov = out.node()->values;
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    ov[i] = f(av[as ? 0 : i], bv[bs ? 0 : i]);
  }
  return out;
}

// Unary elementwise; derivative expressed in terms of (input, output).
template <typename F, typename D>
Tensor elementwise_unary(const Tensor& a, F f, D df) {
  Tensor out = make_op(a.rows(), a.cols(), {a}, [a, df](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    for (std::size_t i = 0; i < self.values.size(); ++i) {
      na->grad[i] += self.grad[i] * df(na->values[i], self.values[i]);
    }
  });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = f(av[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scalar_mul(const Tensor& a, double c) {
  return elementwise_unary(
      a, [c](double x) { return c * x; },
      [c](double, double) { return c; });
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_rowvec: row must be 1x" +
                         std::to_string(a.cols()) + ", got " +
                         std::to_string(row.rows()) + "x" +
                         std::to_string(row.cols()));
  }
  Tensor out = make_op(a.rows(), a.cols(), {a, row}, [a, row](Node& self) {
    Node* na = a.node();
    Node* nr = row.node();
    const int rows = self.rows, cols = self.cols;
    if (na->tracked) {
      na->ensure_grad();
      for (std::size_t i = 0; i < self.values.size(); ++i)
        na->grad[i] += self.grad[i];
    }
    if (nr->tracked) {
      nr->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) nr->grad[c] += self.grad[r * cols + c];
    }
  });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  const auto& rv = row.values();
  const int cols = a.cols();
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < cols; ++c) ov[r * cols + c] = av[r * cols + c] + rv[c];
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a) +
                         " * " + shape_str(b));
  }
  Tensor out = make_op(a.rows(), b.cols(), {a, b}, [a, b](Node& self) {
    Node* na = a.node();
    Node* nb = b.node();
    ConstMatMap dC(self.grad.data(), self.rows, self.cols);
    if (na->tracked) {
      na->ensure_grad();
      MatMap dA(na->grad.data(), na->rows, na->cols);
      dA.noalias() += dC * as_mat(nb->values, nb->rows, nb->cols).transpose();
    }
    if (nb->tracked) {
      nb->ensure_grad();
      MatMap dB(nb->grad.data(), nb->rows, nb->cols);
      dB.noalias() += as_mat(na->values, na->rows, na->cols).transpose() * dC;
    }
  });
  MatMap C(out.node()->values.data(), out.rows(), out.cols());
  C.noalias() = as_mat(a.values(), a.rows(), a.cols()) *
                as_mat(b.values(), b.rows(), b.cols());
  return out;
}

Tensor relu(const Tensor& a) {
  return elementwise_unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor max_with_zero(const Tensor& a) { return relu(a); }

Tensor tanh_op(const Tensor& a) {
  return elementwise_unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return elementwise_unary(
      a,
      [](double x) {
        // Evaluate on the side that avoids exp overflow.
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_op(const Tensor& a) {
  return elementwise_unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log_op(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) {
      throw DomainError("log: nonpositive input " + std::to_string(v) +
                        "; clamp probabilities first");
    }
  }
  return elementwise_unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor clamp_min(const Tensor& a, double floor) {
  return elementwise_unary(
      a, [floor](double x) { return x < floor ? floor : x; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return elementwise_unary(
      a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
  return elementwise_unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor softmax(const Tensor& a) {
  Tensor out = make_op(a.rows(), a.cols(), {a}, [a](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    const int cols = self.cols;
    for (int r = 0; r < self.rows; ++r) {
      const double* s = &self.values[r * cols];
      const double* g = &self.grad[r * cols];
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += g[c] * s[c];
      double* ga = &na->grad[r * cols];
      for (int c = 0; c < cols; ++c) ga[c] += s[c] * (g[c] - dot);
    }
  });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  const int cols = a.cols();
  for (int r = 0; r < a.rows(); ++r) {
    const double* x = &av[r * cols];
    double* y = &ov[r * cols];
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op(1, 1, {a}, [a](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    for (double& g : na->grad) g += self.grad[0];
  });
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.node()->values[0] = s;
  return out;
}

Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out = make_op(1, 1, {a}, [a, inv](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    for (double& g : na->grad) g += self.grad[0] * inv;
  });
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.node()->values[0] = s * inv;
  return out;
}

Tensor row_sum(const Tensor& a) {
  Tensor out = make_op(a.rows(), 1, {a}, [a](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    const int cols = na->cols;
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < cols; ++c) na->grad[r * cols + c] += self.grad[r];
  });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  const int cols = a.cols();
  for (int r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += av[r * cols + c];
    ov[r] = s;
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat: row counts differ");
    }
    cols += p.cols();
  }
  Tensor out = make_op(rows, cols, parts, [parts](Node& self) {
    int off = 0;
    for (const Tensor& p : parts) {
      Node* np = p.node();
      if (np->tracked) {
        np->ensure_grad();
        for (int r = 0; r < self.rows; ++r)
          for (int c = 0; c < np->cols; ++c)
            np->grad[r * np->cols + c] += self.grad[r * self.cols + off + c];
      }
      off += p.cols();
    }
  });
  auto& ov = out.node()->values;
  int off = 0;
  for (const Tensor& p : parts) {
    const auto& pv = p.values();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < p.cols(); ++c)
        ov[r * cols + off + c] = pv[r * p.cols() + c];
    off += p.cols();
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int col_begin, int col_end) {
  if (col_begin < 0 || col_end > a.cols() || col_begin >= col_end) {
    throw DimensionError("slice_cols: invalid range [" +
                         std::to_string(col_begin) + ", " +
                         std::to_string(col_end) + ") for " + shape_str(a));
  }
  const int cols = col_end - col_begin;
  Tensor out =
      make_op(a.rows(), cols, {a}, [a, col_begin, cols](Node& self) {
        Node* na = a.node();
        if (!na->tracked) return;
        na->ensure_grad();
        for (int r = 0; r < self.rows; ++r)
          for (int c = 0; c < cols; ++c)
            na->grad[r * na->cols + col_begin + c] +=
                self.grad[r * cols + c];
      });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < cols; ++c)
      ov[r * cols + c] = av[r * a.cols() + col_begin + c];
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out = make_op(a.cols(), a.rows(), {a}, [a](Node& self) {
    Node* na = a.node();
    if (!na->tracked) return;
    na->ensure_grad();
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < self.cols; ++c)
        na->grad[c * na->cols + r] += self.grad[r * self.cols + c];
  });
  auto& ov = out.node()->values;
  const auto& av = a.values();
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) ov[c * a.rows() + r] = av[r * a.cols() + c];
  return out;
}

Tensor tril_matvec(const Tensor& tri, const Tensor& vec, int dim) {
  const int packed = dim * (dim + 1) / 2;
  if (tri.cols() != packed || vec.cols() != dim || tri.rows() != vec.rows()) {
    throw DimensionError("tril_matvec: need tri n x " +
                         std::to_string(packed) + " and vec n x " +
                         std::to_string(dim) + ", got " + shape_str(tri) +
                         ", " + shape_str(vec));
  }
  Tensor out = make_op(
      tri.rows(), dim, {tri, vec}, [tri, vec, dim, packed](Node& self) {
        Node* nt = tri.node();
        Node* nv = vec.node();
        if (nt->tracked) nt->ensure_grad();
        if (nv->tracked) nv->ensure_grad();
        for (int r = 0; r < self.rows; ++r) {
          const double* u = &nv->values[r * dim];
          const double* t = &nt->values[r * packed];
          const double* gz = &self.grad[r * dim];
          for (int i = 0; i < dim; ++i) {
            for (int j = 0; j <= i; ++j) {
              const int k = tril_index(i, j);
              if (nt->tracked) nt->grad[r * packed + k] += gz[i] * u[j];
              if (nv->tracked) nv->grad[r * dim + j] += gz[i] * t[k];
            }
          }
        }
      });
  auto& ov = out.node()->values;
  const auto& tv = tri.values();
  const auto& vv = vec.values();
  for (int r = 0; r < tri.rows(); ++r) {
    const double* t = &tv[r * packed];
    const double* u = &vv[r * dim];
    double* z = &ov[r * dim];
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += t[tril_index(i, j)] * u[j];
      z[i] = s;
    }
  }
  return out;
}

}  // namespace privmech::ad
