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

#include "privmech/common.hpp"
#include "privmech/datagen.hpp"
#include "privmech/estimators.hpp"
#include "privmech/oracle.hpp"
#include "privmech/rng.hpp"
#include "oracle_reference.hpp"

using namespace privmech;
using namespace privmech::testing;

TEST_CASE("scalar useful-data optimum") {
  const ScalarGaussParams params{1.0, 1.0, 0.85};

  SUBCASE("full budget releases nothing") {
    ScalarUdOptimum opt = scalar_ud_optimum(params, 1.0);
    CHECK(opt.leakage_nats == 0.0);
    CHECK(opt.gain_y == 0.0);
    CHECK(opt.noise_var == 0.0);
    CHECK(scalar_ud_optimum(params, 1.7).leakage_nats == 0.0);
  }
  SUBCASE("frozen value at delta one half") {
    ScalarUdOptimum opt = scalar_ud_optimum(params, 0.5);
    CHECK(opt.leakage_nats == doctest::Approx(0.2241).epsilon(1e-3));
    CHECK(opt.leakage_nats ==
          doctest::Approx(0.5 * std::log(1.0 / 0.63875)).epsilon(1e-12));
  }
  SUBCASE("independent attributes never leak") {
    const ScalarGaussParams indep{1.0, 2.0, 0.0};
    for (double d : {0.0, 0.3, 1.0, 2.5}) {
      CHECK(scalar_ud_optimum(indep, d).leakage_nats == 0.0);
    }
  }
  SUBCASE("negative budget is rejected") {
    CHECK_THROWS_AS(scalar_ud_optimum(params, -0.1), ContractError);
  }
  SUBCASE("the stated mechanism meets the budget and the leakage") {
    for (double d : {0.1, 0.4, 0.8}) {
      ScalarUdOptimum opt = scalar_ud_optimum(params, d);
      // E[(y - z)^2] = (1 - gain)^2 var_y + noise_var.
      const double mse = (1.0 - opt.gain_y) * (1.0 - opt.gain_y) * params.var_y +
                         opt.noise_var;
      CHECK(mse == doctest::Approx(d).epsilon(1e-12));
      CHECK(linear_ud_leakage(params, opt.gain_y, opt.noise_var) ==
            doctest::Approx(opt.leakage_nats).epsilon(1e-12));
    }
  }
  SUBCASE("matches the boundary search on a grid") {
    for (int i = 0; i <= 24; ++i) {
      const double d = 0.02 + i * 0.04;
      CHECK(std::abs(scalar_ud_optimum(params, d).leakage_nats -
                     scalar_ud_reference(params, d)) < 1e-6);
    }
    const ScalarGaussParams other{0.7, 2.3, -0.6};
    for (int i = 0; i <= 20; ++i) {
      const double d = 0.05 + i * 0.1;
      CHECK(std::abs(scalar_ud_optimum(other, d).leakage_nats -
                     scalar_ud_reference(other, d)) < 1e-6);
    }
  }
  SUBCASE("monte carlo simulation of the stated mechanism") {
    const double d = 0.5;
    ScalarUdOptimum opt = scalar_ud_optimum(params, d);
    JointModel model = JointModel::scalar_gauss(params,
                                                Observation::UsefulOnly);
    Rng rng(7);
    Dataset data = sample(model, 40000, rng);
    Eigen::MatrixXd z(data.n(), 1);
    const double noise_sd = std::sqrt(opt.noise_var);
    for (int i = 0; i < data.n(); ++i) {
      z(i, 0) = opt.gain_y * data.y(i, 0) + noise_sd * rng.normal();
    }
    MiEstimate mi = gaussian_mi_estimate(data.x, z);
    CHECK(std::abs(mi.nats - opt.leakage_nats) < 0.03);
    CHECK(empirical_distortion(data.y, z, {DistortionKind::SquaredError}) ==
          doctest::Approx(d).epsilon(0.05));
  }
}

TEST_CASE("scalar full-data optimum") {
  SUBCASE("budgets beyond rho squared leak nothing") {
    CHECK(scalar_fd_optimum(0.85, 0.7225).leakage_nats == 0.0);
    CHECK(scalar_fd_optimum(0.85, 0.9).leakage_nats == 0.0);
    // z = y - rho x is independent of x and meets the budget exactly.
    ScalarFdOptimum opt = scalar_fd_optimum(0.6, 0.36);
    CHECK(linear_fd_leakage(0.6, opt.coeff_res,
                            opt.coeff_y - 0.6 * opt.coeff_res) <= 1e-12);
  }
  SUBCASE("frozen value at rho 0.85, delta 0.2") {
    CHECK(scalar_fd_optimum(0.85, 0.2).leakage_nats ==
          doctest::Approx(0.1610).epsilon(1e-3));
  }
  SUBCASE("zero budget yields the full correlation") {
    const double rho = 0.85;
    CHECK(scalar_fd_optimum(rho, 0.0).leakage_nats ==
          doctest::Approx(-0.5 * std::log(1.0 - rho * rho)).epsilon(1e-12));
  }
  SUBCASE("rho one with a tight budget is singular") {
    CHECK_THROWS_AS(scalar_fd_optimum(1.0, 0.5), DomainError);
    CHECK(scalar_fd_optimum(1.0, 1.0).leakage_nats == 0.0);
  }
  SUBCASE("negative rho is rejected rather than symmetrized") {
    CHECK_THROWS_AS(scalar_fd_optimum(-0.3, 0.1), ContractError);
  }
  SUBCASE("the stated coefficients meet the budget and the leakage") {
    const double rho = 0.85;
    for (double d : {0.05, 0.2, 0.5, 0.7}) {
      ScalarFdOptimum opt = scalar_fd_optimum(rho, d);
      // z = coeff_y y + coeff_res (x - rho y) = alpha x + beta y.
      const double alpha = opt.coeff_res;
      const double beta = opt.coeff_y - rho * opt.coeff_res;
      const double u = 1.0 - beta;
      const double mse = alpha * alpha + u * u - 2.0 * rho * alpha * u;
      CHECK(mse == doctest::Approx(d).epsilon(1e-9));
      CHECK(linear_fd_leakage(rho, alpha, beta) ==
            doctest::Approx(opt.leakage_nats).epsilon(1e-9));
    }
  }
  SUBCASE("matches the boundary search on a grid") {
    for (const double rho : {0.85, 0.4, 0.95}) {
      for (int i = 0; i <= 20; ++i) {
        const double d = 0.01 + i * (rho * rho * 0.95) / 20.0;
        CHECK(std::abs(scalar_fd_optimum(rho, d).leakage_nats -
                       scalar_fd_reference(rho, d)) < 1e-6);
      }
    }
  }
}

TEST_CASE("vector useful-data optimum") {
  VectorGaussParams params;
  params.rho = {0.47, 0.24, 0.85, 0.07, 0.66};
  params.c = 1.0;

  SUBCASE("zero budget recovers the full mutual information") {
    WaterfillResult r = vector_ud_optimum(params, 0.0);
    double expected = 0.0;
    for (double rho : params.rho) {
      expected += -0.5 * std::log(1.0 - rho * rho);
    }
    CHECK(r.leakage_nats == doctest::Approx(expected).epsilon(1e-9));
    for (double a : r.allocation) CHECK(a == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("frozen allocation at budget two") {
    WaterfillResult r = vector_ud_optimum(params, 2.0);
    CHECK(r.leakage_nats == doctest::Approx(0.1569).epsilon(1e-3));
    const std::vector<double> expected = {0, 0, 1, 0, 1};
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(r.allocation[i] == doctest::Approx(expected[i]).epsilon(1e-6));
    }
  }
  SUBCASE("a single component reduces to the scalar curve") {
    for (double rho : {0.85, 0.3}) {
      VectorGaussParams single;
      single.rho = {rho};
      single.c = 1.0;
      for (int i = 0; i <= 20; ++i) {
        const double d = i * 0.05;
        const double scalar =
            scalar_ud_optimum({1.0, 1.0, rho}, d).leakage_nats;
        CHECK(vector_ud_optimum(single, d).leakage_nats ==
              doctest::Approx(scalar).epsilon(1e-9));
      }
    }
  }
  SUBCASE("matches KKT pattern enumeration on a grid") {
    for (int i = 0; i <= 24; ++i) {
      const double d = 0.2 * i;
      CHECK(std::abs(vector_ud_optimum(params, d).leakage_nats -
                     vector_ud_reference(params, d)) < 1e-6);
    }
  }
  SUBCASE("no random feasible allocation beats the waterfilling value") {
    Rng rng(11);
    const double d = 1.3;
    const double ours = vector_ud_optimum(params, d).leakage_nats;
    for (int trial = 0; trial < 4000; ++trial) {
      // Random allocation on the simplex scaled to the budget, clipped at 1.
      std::vector<double> a(5);
      double sum = 0.0;
      for (double& v : a) {
        v = -std::log(std::max(rng.uniform(), 1e-12));
        sum += v;
      }
      double total = 0.0;
      for (double& v : a) {
        v = std::min(1.0, v * d / sum);
        total += v;
      }
      if (total > d + 1e-9) continue;
      double leak = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double r2 = params.rho[j] * params.rho[j];
        leak += std::max(0.0, -0.5 * std::log(1.0 - r2 + r2 * a[j]));
      }
      CHECK(leak >= ours - 1e-9);
    }
  }
  SUBCASE("waterfilling satisfies the KKT structure") {
    for (double d : {0.4, 1.1, 2.7, 4.4}) {
      WaterfillResult r = vector_ud_optimum(params, d);
      double sum = 0.0;
      for (std::size_t i = 0; i < r.allocation.size(); ++i) {
        sum += r.allocation[i];
        const double offset =
            1.0 / (params.rho[i] * params.rho[i]) - 1.0;
        if (r.allocation[i] > 1e-8 && r.allocation[i] < 1.0 - 1e-8) {
          CHECK(std::abs(r.allocation[i] - (r.level - offset)) < 1e-8);
        }
      }
      CHECK(std::abs(sum - d) < 1e-9);
    }
  }
  SUBCASE("budget beyond full per-component distortion has slack") {
    WaterfillResult r = vector_ud_optimum(params, 9.0);
    CHECK(r.leakage_nats == 0.0);
    for (double a : r.allocation) CHECK(a == 1.0);
  }
}

TEST_CASE("rate distortion waterfilling") {
  const std::vector<double> variances = {0.47, 0.24, 0.85, 0.07, 0.66};

  SUBCASE("full distortion gives zero rate") {
    double total = 0.0;
    for (double v : variances) total += v;
    WaterfillResult r = rate_distortion(variances, total);
    CHECK(r.leakage_nats == 0.0);
    for (std::size_t j = 0; j < variances.size(); ++j) {
      CHECK(r.allocation[j] == variances[j]);
    }
  }
  SUBCASE("frozen value at distortion one quarter") {
    WaterfillResult r = rate_distortion(variances, 0.25);
    CHECK(r.level == doctest::Approx(0.05).epsilon(1e-9));
    for (double a : r.allocation) CHECK(a == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(r.leakage_nats == doctest::Approx(4.7796).epsilon(1e-4));
  }
  SUBCASE("a single gaussian source follows the scalar formula") {
    WaterfillResult r = rate_distortion({1.0}, 0.5);
    CHECK(r.leakage_nats == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("matches clamp-pattern enumeration on a grid") {
    for (int i = 1; i <= 24; ++i) {
      const double d = 0.1 * i;
      CHECK(std::abs(rate_distortion(variances, d).leakage_nats -
                     rate_distortion_reference(variances, d)) < 1e-6);
    }
  }
  SUBCASE("no random feasible split beats the waterfilling rate") {
    Rng rng(13);
    const double d = 0.8;
    const double ours = rate_distortion(variances, d).leakage_nats;
    for (int trial = 0; trial < 4000; ++trial) {
      std::vector<double> split(5);
      double sum = 0.0;
      for (double& v : split) {
        v = -std::log(std::max(rng.uniform(), 1e-12));
        sum += v;
      }
      double rate = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double dj = std::min(variances[j], split[j] * d / sum);
        rate += std::max(0.0, 0.5 * std::log(variances[j] / dj));
      }
      CHECK(rate >= ours - 1e-9);
    }
  }
}

TEST_CASE("symmetric pair curves") {
  SUBCASE("independence parameter zeroes both curves") {
    const SymmetricPairParams indep{4, 0.75};
    CHECK(symmetric_pair_mi(indep) == doctest::Approx(0.0).epsilon(1e-12));
    for (double d : {0.0, 0.2, 0.5, 0.9}) {
      CHECK(symmetric_pair_curve(indep, d, Observation::FullData) ==
            doctest::Approx(0.0).epsilon(1e-9));
      CHECK(symmetric_pair_curve(indep, d, Observation::UsefulOnly) ==
            doctest::Approx(0.0).epsilon(1e-9));
    }
  }
  SUBCASE("frozen value at zero budget") {
    const SymmetricPairParams params{4, 0.25};
    CHECK(symmetric_pair_curve(params, 0.0, Observation::FullData) ==
          doctest::Approx(0.5493).epsilon(1e-3));
    CHECK(symmetric_pair_curve(params, 0.0, Observation::UsefulOnly) ==
          doctest::Approx(0.5493).epsilon(1e-3));
    CHECK(symmetric_pair_mi(params) ==
          doctest::Approx(symmetric_pair_mi_reference(4, 0.25)).epsilon(1e-12));
  }
  SUBCASE("useful-only curve is zero beyond 1 - 1/m") {
    const SymmetricPairParams params{4, 0.25};
    CHECK(symmetric_pair_curve(params, 0.75, Observation::UsefulOnly) == 0.0);
    CHECK(symmetric_pair_curve(params, 0.9, Observation::UsefulOnly) == 0.0);
  }
  SUBCASE("useful-only curve equals the composed-channel mutual information") {
    const SymmetricPairParams params{4, 0.25};
    for (int i = 0; i <= 25; ++i) {
      const double d = i * 0.04;
      CHECK(std::abs(symmetric_pair_curve(params, d, Observation::UsefulOnly) -
                     symmetric_pair_ud_reference(4, 0.25, d)) < 1e-9);
    }
    const SymmetricPairParams wide{6, 0.4};
    for (int i = 0; i <= 20; ++i) {
      const double d = i * 0.05;
      CHECK(std::abs(symmetric_pair_curve(wide, d, Observation::UsefulOnly) -
                     symmetric_pair_ud_reference(6, 0.4, d)) < 1e-9);
    }
  }
  SUBCASE("full-data branches evaluate r_m at the shifted parameter") {
    const SymmetricPairParams params{4, 0.25};
    // First branch active while delta <= 1 - 1/m - p = 0.5.
    for (double d : {0.1, 0.3, 0.5}) {
      CHECK(symmetric_pair_curve(params, d, Observation::FullData) ==
            doctest::Approx(symmetric_pair_mi_reference(4, 0.25 + d))
                .epsilon(1e-9));
    }
    CHECK(symmetric_pair_curve(params, 0.6, Observation::FullData) == 0.0);
    // Second branch needs p > 1 - 1/m.
    const SymmetricPairParams heavy{4, 0.9};
    for (double d : {0.05, 0.1}) {
      CHECK(symmetric_pair_curve(heavy, d, Observation::FullData) ==
            doctest::Approx(symmetric_pair_mi_reference(4, 0.9 - d))
                .epsilon(1e-9));
    }
    CHECK(symmetric_pair_curve(heavy, 0.2, Observation::FullData) == 0.0);
  }
  SUBCASE("budget outside [0, 1] is rejected") {
    const SymmetricPairParams params{4, 0.25};
    CHECK_THROWS_AS(
        symmetric_pair_curve(params, -0.1, Observation::UsefulOnly),
        ContractError);
    CHECK_THROWS_AS(symmetric_pair_curve(params, 1.2, Observation::FullData),
                    ContractError);
  }
}

TEST_CASE("all curves are nonnegative and non-increasing on dense grids") {
  const ScalarGaussParams scalar{1.0, 1.0, 0.85};
  VectorGaussParams vec;
  vec.rho = {0.47, 0.24, 0.85, 0.07, 0.66};
  const std::vector<double> variances = {0.47, 0.24, 0.85, 0.07, 0.66};
  const SymmetricPairParams pair{4, 0.25};

  double prev_ud = 1e300, prev_fd = 1e300, prev_vec = 1e300, prev_rd = 1e300,
         prev_sp_ud = 1e300, prev_sp_fd = 1e300;
  for (int i = 0; i <= 200; ++i) {
    const double t = i / 200.0;
    const double ud = scalar_ud_optimum(scalar, t * 1.2).leakage_nats;
    const double fd = scalar_fd_optimum(0.85, t * 0.9).leakage_nats;
    const double vu = vector_ud_optimum(vec, t * 5.0).leakage_nats;
    const double rd = rate_distortion(variances, 0.01 + t * 2.4).leakage_nats;
    const double su = symmetric_pair_curve(pair, t, Observation::UsefulOnly);
    const double sf = symmetric_pair_curve(pair, t, Observation::FullData);
    for (double v : {ud, fd, vu, rd, su, sf}) CHECK(v >= 0.0);
    CHECK(ud <= prev_ud + 1e-12);
    CHECK(fd <= prev_fd + 1e-12);
    CHECK(vu <= prev_vec + 1e-12);
    CHECK(rd <= prev_rd + 1e-12);
    CHECK(su <= prev_sp_ud + 1e-12);
    // The full-data curve is non-increasing only on its first branch; after
    // it hits zero it stays zero for this p.
    CHECK(sf <= prev_sp_fd + 1e-12);
    prev_ud = ud;
    prev_fd = fd;
    prev_vec = vu;
    prev_rd = rd;
    prev_sp_ud = su;
    prev_sp_fd = sf;
  }
}

TEST_CASE("covariance reduction to normalized singular values") {
  SUBCASE("diagonal case recovers the correlations and unit scale") {
    const int d = 5;
    const std::vector<double> rho = {0.47, 0.24, 0.85, 0.07, 0.66};
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) cross(i, i) = rho[i];
    VectorGaussParams params = vector_params_from_covariances(eye, eye, cross);
    CHECK(params.c == doctest::Approx(1.0).epsilon(1e-9));
    // Singular values come back sorted descending.
    std::vector<double> sorted = rho;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    REQUIRE(params.rho.size() == sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      CHECK(params.rho[i] == doctest::Approx(sorted[i]).epsilon(1e-9));
    }
  }
  SUBCASE("models violating the scaled-identity condition are rejected") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd sigma_y(2, 2);
    sigma_y << 1.0, 0.0, 0.0, 4.0;
    Eigen::MatrixXd cross(2, 2);
    cross << 0.5, 0.0, 0.0, 0.3;
    CHECK_THROWS_AS(vector_params_from_covariances(eye, sigma_y, cross),
                    ModelError);
  }
  SUBCASE("zero cross-covariance is rejected as singular") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(vector_params_from_covariances(eye, eye, zero),
                    ModelError);
  }
}
