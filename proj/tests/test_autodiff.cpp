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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "privmech/adam.hpp"
#include "privmech/common.hpp"
#include "privmech/tensor.hpp"
#include "test_support.hpp"

using namespace privmech;
using namespace privmech::testing;
using ad::Tensor;

TEST_CASE("matmul identity leaves the matrix unchanged") {
  Tensor a = Tensor::constant(2, 2, {1, 2, 3, 4});
  Tensor eye = Tensor::constant(2, 2, {1, 0, 0, 1});
  Tensor c = ad::matmul(a, eye);
  CHECK(c.values() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a = Tensor::zeros(2, 3);
  Tensor b = Tensor::zeros(2, 3);
  CHECK_THROWS_AS(ad::matmul(a, b), DimensionError);
}

TEST_CASE("elementwise ops reject shape mismatches") {
  Tensor a = Tensor::zeros(2, 3);
  Tensor b = Tensor::zeros(3, 2);
  CHECK_THROWS_AS(ad::add(a, b), DimensionError);
  CHECK_THROWS_AS(ad::mul(a, b), DimensionError);
}

TEST_CASE("softmax of a constant row is uniform and rows sum to one") {
  Tensor s = ad::softmax(Tensor::constant(1, 3, {0, 0, 0}));
  for (double v : s.values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Rng rng(7);
  Tensor logits = random_tensor(40, 9, rng, -8.0, 8.0, false);
  Tensor p = ad::softmax(logits);
  for (int r = 0; r < p.rows(); ++r) {
    double sum = 0.0;
    for (int c = 0; c < p.cols(); ++c) sum += p.at(r, c);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  Tensor clamped = ad::clamp_min(p, kProbEps);
  for (double v : clamped.values()) CHECK(v > 0.0);
}

TEST_CASE("analytic values of tanh and sigmoid at zero") {
  CHECK(ad::tanh_op(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(ad::sigmoid(Tensor::scalar(0.0)).item() == 0.5);
}

TEST_CASE("backward of sum of squares gives 2w") {
  Tensor w = Tensor::parameter(1, 2, {1, 2});
  ad::backward(ad::sum(ad::square(w)));
  CHECK(w.grad()[0] == doctest::Approx(2.0));
  CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward of sigmoid at zero gives 0.25") {
  Tensor x = Tensor::parameter(1, 1, {0.0});
  ad::backward(ad::sigmoid(x));
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor w = Tensor::parameter(1, 2, {1, 2});
  CHECK_THROWS_AS(ad::backward(ad::square(w)), ContractError);
}

TEST_CASE("log of nonpositive values is a domain error") {
  CHECK_THROWS_AS(ad::log_op(Tensor::constant(1, 2, {0.5, 0.0})), DomainError);
  CHECK_THROWS_AS(ad::log_op(Tensor::constant(1, 1, {-1.0})), DomainError);
}

TEST_CASE("repeated backward calls accumulate into leaf grads") {
  Tensor w = Tensor::parameter(1, 2, {1, 2});
  Tensor loss = ad::sum(ad::square(w));
  ad::backward(loss);
  ad::backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(4.0));
  CHECK(w.grad()[1] == doctest::Approx(8.0));
}

TEST_CASE("detach cuts the tape") {
  Tensor w = Tensor::parameter(1, 2, {1, 2});
  Tensor frozen = ad::square(w).detach();
  CHECK_FALSE(frozen.tracked());
  Tensor loss = ad::sum(ad::mul(frozen, w));
  ad::backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(1.0));  // only the direct factor
  CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("primitive gradients match central finite differences") {
  Rng rng(11);

  SUBCASE("matmul") {
    Tensor a = random_tensor(3, 4, rng);
    Tensor b = random_tensor(4, 2, rng);
    CHECK(max_grad_error({a, b}, [&] {
            return ad::sum(ad::matmul(a, b));
          }) < 1e-4);
  }
  SUBCASE("add sub mul with scalar broadcast") {
    Tensor a = random_tensor(2, 3, rng);
    Tensor b = random_tensor(2, 3, rng);
    Tensor s = random_tensor(1, 1, rng);
    CHECK(max_grad_error({a, b, s}, [&] {
            return ad::sum(ad::mul(ad::add(a, s), ad::sub(a, b)));
          }) < 1e-4);
  }
  SUBCASE("smooth unaries") {
    Tensor a = random_tensor(2, 4, rng, 0.2, 1.5);
    CHECK(max_grad_error({a}, [&] {
            return ad::sum(ad::add(
                ad::exp_op(ad::tanh_op(a)),
                ad::log_op(ad::add(ad::square(ad::sigmoid(a)),
                                   Tensor::scalar(0.1)))));
          }) < 1e-4);
  }
  SUBCASE("relu and max_with_zero away from the kink") {
    Tensor a = Tensor::parameter(1, 4, {-1.3, -0.4, 0.6, 2.0});
    CHECK(max_grad_error({a}, [&] {
            return ad::sum(ad::add(ad::relu(a),
                                   ad::max_with_zero(ad::scalar_mul(a, 2.0))));
          }) < 1e-4);
  }
  SUBCASE("softmax rows") {
    Tensor a = random_tensor(3, 5, rng, -2.0, 2.0);
    Tensor pick = random_tensor(3, 5, rng, 0.0, 1.0, false);
    CHECK(max_grad_error({a}, [&] {
            return ad::sum(ad::mul(ad::softmax(a), pick));
          }) < 1e-4);
  }
  SUBCASE("reductions and shapes") {
    Tensor a = random_tensor(3, 4, rng);
    Tensor b = random_tensor(3, 2, rng);
    CHECK(max_grad_error({a, b}, [&] {
            Tensor joined = ad::concat({a, b});
            Tensor left = ad::slice_cols(joined, 0, 3);
            return ad::add(ad::mean(ad::transpose(left)),
                           ad::sum(ad::row_sum(joined)));
          }) < 1e-4);
  }
  SUBCASE("add_rowvec and scalar_mul") {
    Tensor a = random_tensor(4, 3, rng);
    Tensor row = random_tensor(1, 3, rng);
    CHECK(max_grad_error({a, row}, [&] {
            return ad::sum(ad::square(ad::scalar_mul(ad::add_rowvec(a, row), 1.7)));
          }) < 1e-4);
  }
  SUBCASE("clamp pass-through region") {
    Tensor a = Tensor::parameter(1, 3, {0.2, 0.5, 0.8});
    CHECK(max_grad_error({a}, [&] {
            return ad::sum(ad::log_op(ad::clamp(a, 1e-3, 1.0 - 1e-3)));
          }) < 1e-4);
  }
  SUBCASE("tril_matvec") {
    Tensor tri = random_tensor(3, 6, rng);
    Tensor vec = random_tensor(3, 3, rng);
    CHECK(max_grad_error({tri, vec}, [&] {
            return ad::sum(ad::square(ad::tril_matvec(tri, vec, 3)));
          }) < 1e-4);
  }
}

TEST_CASE("three-layer MLP gradient matches finite differences") {
  Rng rng(23);
  Tensor x = random_tensor(5, 3, rng, -1.0, 1.0, false);
  Tensor w1 = random_tensor(3, 4, rng, -0.6, 0.6);
  Tensor b1 = random_tensor(1, 4, rng, -0.3, 0.3);
  Tensor w2 = random_tensor(4, 4, rng, -0.6, 0.6);
  Tensor b2 = random_tensor(1, 4, rng, -0.3, 0.3);
  Tensor w3 = random_tensor(4, 1, rng, -0.6, 0.6);
  Tensor b3 = random_tensor(1, 1, rng, -0.3, 0.3);

  const auto build = [&] {
    Tensor h1 = ad::relu(ad::add_rowvec(ad::matmul(x, w1), b1));
    Tensor h2 = ad::tanh_op(ad::add_rowvec(ad::matmul(h1, w2), b2));
    Tensor out = ad::add_rowvec(ad::matmul(h2, w3), b3);
    return ad::mean(ad::square(out));
  };
  CHECK(max_grad_error({w1, b1, w2, b2, w3, b3}, build) < 1e-4);
}

TEST_CASE("tape replay is bitwise deterministic") {
  Rng rng(31);
  std::vector<double> xv(12), wv(12);
  rng.fill_uniform(xv, -1.0, 1.0);
  rng.fill_uniform(wv, -1.0, 1.0);

  const auto run = [&](std::vector<double>& grad_out) {
    Tensor x = Tensor::constant(3, 4, xv);
    Tensor w = Tensor::parameter(4, 3, wv);
    Tensor loss = ad::mean(ad::tanh_op(ad::matmul(x, w)));
    ad::backward(loss);
    grad_out = w.grad();
    return loss.item();
  };
  std::vector<double> g1, g2;
  const double l1 = run(g1);
  const double l2 = run(g2);
  CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
  REQUIRE(g1.size() == g2.size());
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("adam first step magnitude is alpha under unit gradient") {
  Tensor p = Tensor::parameter(1, 1, {1.0});
  Adam opt({p});
  p.zero_grad();
  ad::backward(p);  // d p / d p = 1
  opt.step();
  // m-hat = v-hat = 1 exactly, so the update is alpha / (1 + eps).
  CHECK(opt.step_count() == 1);
  CHECK(p.values()[0] == doctest::Approx(1.0 - 0.001 / (1.0 + 1e-8))
                             .epsilon(1e-12));
}

TEST_CASE("adam leaves parameters unchanged under zero gradient") {
  Tensor p = Tensor::parameter(1, 2, {0.5, -0.25});
  Adam opt({p});
  p.zero_grad();
  ad::backward(ad::scalar_mul(ad::sum(p), 0.0));
  opt.step();
  CHECK(p.values()[0] == 0.5);
  CHECK(p.values()[1] == -0.25);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam requires grads") {
  Tensor p = Tensor::parameter(1, 1, {1.0});
  Adam opt({p});
  CHECK_THROWS_AS(opt.step(), ContractError);
}

TEST_CASE("adam second moments stay nonnegative") {
  Rng rng(3);
  Tensor p = random_tensor(2, 3, rng);
  Adam opt({p});
  for (int it = 0; it < 25; ++it) {
    opt.zero_grad();
    ad::backward(ad::mean(ad::mul(p, random_tensor(2, 3, rng, -2.0, 2.0, false))));
    opt.step();
  }
  for (double v : opt.second_moment(0)) CHECK(v >= 0.0);
}

TEST_CASE("identical optimization runs are bit-identical") {
  const auto run = [] {
    Rng rng(99);
    Tensor x = random_tensor(8, 3, rng, -1.0, 1.0, false);
    Tensor w = random_tensor(3, 2, rng);
    Adam opt({w});
    for (int it = 0; it < 20; ++it) {
      opt.zero_grad();
      ad::backward(ad::mean(ad::square(ad::matmul(x, w))));
      opt.step();
    }
    return w.values();
  };
  const std::vector<double> a = run();
  const std::vector<double> b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}
